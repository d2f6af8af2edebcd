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

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hjmm/basis.hpp"
#include "hjmm/curve.hpp"
#include "hjmm/filipovic.hpp"
#include "hjmm/projection.hpp"

namespace hjmm {

/// The left shift (U_t f)(x) = f(t + x).
struct ShiftOperator {
    double t = 0.0;

    explicit ShiftOperator(double t_) : t(t_) { HJMM_REQUIRE(t >= 0.0, InvalidArgument, "shift must be >= 0"); }

    Curve operator()(const Curve& f, std::optional<double> x_max_out = std::nullopt) const;
    CoeffState operator()(const CoeffState& s) const;
};

/// U_t f on [0, x_max_out] as a plain curve with f's step.
///
/// Defaults: x_max_out = x_max - t for plain curves and T for localized ones.
/// Off-grid shifts interpolate the derivative with cubic Lagrange stencils.
inline Curve shift_curve(const Curve& f, double t, std::optional<double> x_max_out = std::nullopt) {
    HJMM_REQUIRE(t >= 0.0, InvalidArgument, "shift must be >= 0");
    const double h = f.grid_step;
    double extent = 0.0;
    if (x_max_out) {
        extent = *x_max_out;
    } else {
        extent = f.localized ? f.x_max() : f.x_max() - t;
    }
    if (!f.localized) {
        HJMM_REQUIRE(t + extent <= f.x_max() * (1.0 + 1e-12) + 1e-12, DomainTooShort,
                     "shifted curve exceeds the represented grid");
    }
    const auto n = static_cast<std::size_t>(std::floor(extent / h + 1e-9));
    HJMM_REQUIRE(n >= 1, DomainTooShort, "shifted curve is shorter than one grid step");
    CurveEvaluator ev(f);
    Curve out;
    out.value_at_zero = ev.value(t);
    out.grid_step = h;
    out.deriv_samples.resize(n + 1);
    const auto idx = grid_index(t, h);
    for (std::size_t j = 0; j <= n; ++j) {
        if (!f.localized && idx) {
            out.deriv_samples[j] = f.deriv_samples[*idx + j];
        } else {
            out.deriv_samples[j] = derivative_at(f, t + out.x(j));
        }
    }
    return out;
}

/// U_t on states: c_*' = c_* + sum c_n g_n(t), c_n' = e^{lambda_n t} c_n.
inline CoeffState shift_coeffs(const CoeffState& s, double t) {
    HJMM_REQUIRE(t >= 0.0, InvalidArgument, "shift must be >= 0");
    CoeffState out = s;
    for (int n = -s.k(); n <= s.k(); ++n) {
        const cplx a = s.at(n);
        out.c_star += a * eval_g_n(s.params, n, t);
        out.at(n) = std::exp(lambda_value(s.params, n) * t) * a;
    }
    return out;
}

/// shift_coeffs with the factors e^{lambda_n t} and g_n(t) precomputed for a fixed t.
class ShiftCache {
public:
    ShiftCache(const BasisParams& p, double t) : params_(p), t_(t) {
        HJMM_REQUIRE(t >= 0.0, InvalidArgument, "shift must be >= 0");
        for (int n = -p.k; n <= p.k; ++n) {
            growth_.push_back(std::exp(lambda_value(p, n) * t));
            value_.push_back(eval_g_n(p, n, t));
        }
    }

    double t() const { return t_; }

    /// In-place U_t on a state with the cache's truncation.
    void apply(CoeffState& s) const {
        HJMM_REQUIRE(s.k() == params_.k, InvalidArgument, "shift cache built for another truncation");
        for (std::size_t j = 0; j < s.c.size(); ++j) {
            s.c_star += s.c[j] * value_[j];
            s.c[j] *= growth_[j];
        }
    }

private:
    BasisParams params_;
    double t_;
    std::vector<cplx> growth_;
    std::vector<cplx> value_;
};

/// Eigenvalue of U_t^* on g_n^*: e^{conj(lambda_n) t}.
inline cplx adjoint_on_dual(const BasisParams& p, int n, double t) {
    return std::exp(std::conj(lambda_value(p, n)) * t);
}

inline Curve ShiftOperator::operator()(const Curve& f, std::optional<double> x_max_out) const {
    return shift_curve(f, t, x_max_out);
}

inline CoeffState ShiftOperator::operator()(const CoeffState& s) const { return shift_coeffs(s, t); }

/// (Pi_k U_t - U_t Pi_k) s, evaluated on states of truncation K >= k.
inline CoeffState commutator_on_state(const CoeffState& s, int k, double t) {
    HJMM_REQUIRE(k <= s.k(), InvalidArgument, "commutator level exceeds state truncation");
    const auto lhs = truncate(shift_coeffs(s, t), k);
    const auto rhs = shift_coeffs(truncate(s, k), t);
    return truncate(lhs, s.k()) - truncate(rhs, s.k());
}

/// sqrt(1 + (1 - e^{-alpha t}) / alpha), the exact operator norm of U_t on H_alpha.
inline double shift_norm_exact(double alpha, double t) {
    return std::sqrt(1.0 + -std::expm1(-alpha * t) / alpha);
}

/// sqrt(2 (1 ^ alpha^{-1})), the uniform shift bound in its customary form.
inline double shift_norm_constant(double alpha) { return std::sqrt(2.0 * std::min(1.0, 1.0 / alpha)); }

/// U_t^* for the H_alpha inner product, mapping a curve on [0, X - t] to one on [0, X].
///
/// (U_t^* y)' = e^{-alpha x} y(0) on [0, t) and e^{-alpha t} y'(x - t) beyond.
inline Curve shift_adjoint(const Curve& y, double alpha, double t) {
    const auto m0 = grid_index(t, y.grid_step);
    HJMM_REQUIRE(m0.has_value(), GridMismatch, "adjoint shift must be a grid multiple");
    Curve out;
    out.value_at_zero = y.value_at_zero;
    out.grid_step = y.grid_step;
    out.deriv_samples.resize(y.deriv_samples.size() + *m0);
    for (std::size_t j = 0; j < out.deriv_samples.size(); ++j) {
        if (j < *m0) {
            out.deriv_samples[j] = std::exp(-alpha * out.x(j)) * y.value_at_zero;
        } else {
            out.deriv_samples[j] = std::exp(-alpha * t) * y.deriv_samples[j - *m0];
        }
    }
    return out;
}

/// Power iteration on U_t^* U_t over plain curves on [0, extent]; returns the estimate of ||U_t||.
inline double estimate_shift_norm(double alpha, double t, std::uint64_t seed, double extent = 4.0,
                                  std::size_t points = 4097, int iterations = 60) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Curve h;
    h.grid_step = extent / static_cast<double>(points - 1);
    HJMM_REQUIRE(grid_index(t, h.grid_step).has_value(), GridMismatch, "shift must be a grid multiple");
    h.value_at_zero = nd(rng);
    h.deriv_samples.resize(points);
    for (auto& v : h.deriv_samples) v = nd(rng);
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
        h = (1.0 / norm_alpha(h, alpha)) * h;
        const Curve u = shift_curve(h, t);
        est = norm_alpha(u, alpha);
        h = shift_adjoint(u, alpha, t);
    }
    return est;
}

}  // namespace hjmm
