/*
 * Copyright 2026 The hjmm-riesz Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Closed-form evaluation of the Riesz basis {g_*, g_n} on the localized
// Filipovic space, its biorthogonal system and the auxiliary maps cut, A,
// e_n and e_n^*.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>

#include "hjmm/errors.hpp"

namespace hjmm {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// The basis is fixed by the weight alpha, damping lambda, horizon T and
/// truncation level k.
struct BasisParams {
    double alpha = 1.0;
    double lambda = 0.5;
    double horizon_T = 1.0;
    int k = 0;

    void validate() const {
        HJMM_REQUIRE(alpha > 0.0 && std::isfinite(alpha), InvalidArgument, "alpha must be positive");
        HJMM_REQUIRE(lambda > 0.0 && std::isfinite(lambda), InvalidArgument, "lambda must be positive");
        HJMM_REQUIRE(horizon_T > 0.0 && std::isfinite(horizon_T), InvalidArgument,
                     "horizon_T must be positive");
        HJMM_REQUIRE(k >= 0, InvalidArgument, "truncation level k must be nonnegative");
    }

    /// Common decay rate lambda + alpha/2 = -Re(lambda_n).
    double decay() const { return lambda + 0.5 * alpha; }

    /// 1 / (1 - e^{-2 lambda T}): upper frame constant and norm^2 of the localization.
    double frame_upper() const { return 1.0 / -std::expm1(-2.0 * lambda * horizon_T); }

    /// e^{-2 lambda T} / (1 - e^{-2 lambda T}).
    double frame_lower() const { return std::exp(-2.0 * lambda * horizon_T) * frame_upper(); }

    /// Per-period derivative decay factor e^{-(lambda + alpha/2) T}.
    double period_decay() const { return std::exp(-decay() * horizon_T); }

    friend bool operator==(const BasisParams&, const BasisParams&) = default;

    BasisParams with_k(int new_k) const {
        BasisParams p = *this;
        p.k = new_k;
        return p;
    }
};

/// lambda_n together with its index.
struct ComplexExponent {
    cplx value;
    int index_n = 0;
};

inline ComplexExponent lambda_n(const BasisParams& p, int n) {
    return {cplx(-p.decay(), 2.0 * pi * n / p.horizon_T), n};
}

inline cplx lambda_value(const BasisParams& p, int n) { return lambda_n(p, n).value; }

/// (e^{z L} - 1) / z, continuous at z = 0.
inline cplx exprel(cplx z, double L) {
    const cplx zl = z * L;
    if (std::abs(zl) < 1e-5) {
        return L * (1.0 + zl / 2.0 + zl * zl / 6.0 + zl * zl * zl / 24.0);
    }
    if (zl.imag() == 0.0) return std::expm1(zl.real()) / z;
    // expm1 for complex: e^{a+ib} - 1 = (e^a - 1) cos b + (cos b - 1) + i e^a sin b
    const double a = zl.real();
    const double b = zl.imag();
    const double em1 = std::expm1(a);
    const double cm1 = -2.0 * std::sin(0.5 * b) * std::sin(0.5 * b);
    return cplx(em1 * std::cos(b) + cm1, std::exp(a) * std::sin(b)) / z;
}

/// x - T floor(x/T), with x = mT mapped to 0 even under rounding.
inline double cut(double x, double T) {
    HJMM_REQUIRE(x >= 0.0, InvalidArgument, "cut requires x >= 0");
    const double q = x / T;
    double m = std::floor(q);
    const double guard = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, q);
    if ((m + 1.0) - q <= guard) m += 1.0;
    const double r = x - m * T;
    if (r < 0.0 || r >= T) return 0.0;
    if (r <= guard * T) return 0.0;
    return r;
}

/// Index of the period containing x, consistent with cut().
inline long period_index(double x, double T) {
    return std::lround((x - cut(x, T)) / T);
}

inline double eval_g_star(double /*x*/) { return 1.0; }

/// g_n(x) = (e^{lambda_n x} - 1) / (lambda_n sqrt T).
inline cplx eval_g_n(const BasisParams& p, int n, double x) {
    const cplx ln = lambda_value(p, n);
    return exprel(ln, x) / std::sqrt(p.horizon_T);
}

/// g_n'(x) = e^{lambda_n x} / sqrt T.
inline cplx eval_g_n_prime(const BasisParams& p, int n, double x) {
    return std::exp(lambda_value(p, n) * x) / std::sqrt(p.horizon_T);
}

/// e_n(x) = T^{-1/2} exp((2 pi i n / T - lambda) x).
inline cplx eval_e_n(const BasisParams& p, int n, double x) {
    const cplx z(-p.lambda, 2.0 * pi * n / p.horizon_T);
    return std::exp(z * x) / std::sqrt(p.horizon_T);
}

/// e_n^*(x) = (1 - e^{-2 lambda T}) e^{2 lambda cut(x)} e_n(x).
inline cplx eval_e_n_star(const BasisParams& p, int n, double x) {
    const double T = p.horizon_T;
    return -std::expm1(-2.0 * p.lambda * T) * std::exp(2.0 * p.lambda * cut(x, T)) * eval_e_n(p, n, x);
}

/// Derivative of g_n^*: e^{-alpha x / 2} e_n^*(x).
inline cplx eval_g_n_star_prime(const BasisParams& p, int n, double x) {
    return std::exp(-0.5 * p.alpha * x) * eval_e_n_star(p, n, x);
}

/// g_n^*(x) = int_0^x e^{-alpha y/2} e_n^*(y) dy, integrated exactly period by period.
///
/// On period m the integrand is K q^m e^{(lambda_n + 2 lambda) r} with
/// r = cut(y), K = (1 - e^{-2 lambda T}) / sqrt T and q = e^{-(lambda + alpha/2) T}.
inline cplx eval_g_n_star(const BasisParams& p, int n, double x) {
    HJMM_REQUIRE(x >= 0.0, InvalidArgument, "g_n^* requires x >= 0");
    const double T = p.horizon_T;
    const double K = -std::expm1(-2.0 * p.lambda * T) / std::sqrt(T);
    const cplx z = lambda_value(p, n) + 2.0 * p.lambda;
    const double q = p.period_decay();
    const double r = cut(x, T);
    const long m = period_index(x, T);
    const cplx full = exprel(z, T);
    // sum_{j<m} q^j = (1 - q^m) / (1 - q)
    const double qm = std::pow(q, static_cast<double>(m));
    const double geo = (m == 0) ? 0.0 : -std::expm1(m * std::log(q)) / (1.0 - q);
    return K * (full * geo + qm * exprel(z, r));
}

/// (A f)(x) = e^{-lambda x} f(cut(x)) for f defined on [0, T).
inline cplx apply_A(const std::function<cplx(double)>& f, const BasisParams& p, double x) {
    return std::exp(-p.lambda * x) * f(cut(x, p.horizon_T));
}

}  // namespace hjmm
