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

// Localization projector, finite-rank projector, coefficient transforms,
// commutator objects and the truncation-rate constants.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjmm/basis.hpp"
#include "hjmm/curve.hpp"
#include "hjmm/fft.hpp"
#include "hjmm/filipovic.hpp"

namespace hjmm {

/// Intervals per period used for basis curves built by this module.
inline constexpr std::size_t default_period_intervals = 2048;

/// Coefficients (c_*, c_{-k}, ..., c_k) of a curve in span{g_*, g_{-k}, ..., g_k}.
struct CoeffState {
    cplx c_star{};
    std::vector<cplx> c;  ///< c[n + k] is the coefficient of g_n
    BasisParams params;

    int k() const { return params.k; }
    cplx& at(int n) { return c[static_cast<std::size_t>(n + params.k)]; }
    cplx at(int n) const { return c[static_cast<std::size_t>(n + params.k)]; }

    static CoeffState zero(const BasisParams& p) {
        CoeffState s;
        s.params = p;
        s.c.assign(static_cast<std::size_t>(2 * p.k + 1), cplx{});
        return s;
    }

    /// g_n as a state (|n| <= k).
    static CoeffState unit(const BasisParams& p, int n) {
        HJMM_REQUIRE(std::abs(n) <= p.k, InvalidArgument, "unit index outside truncation");
        auto s = zero(p);
        s.at(n) = 1.0;
        return s;
    }

    static CoeffState unit_star(const BasisParams& p) {
        auto s = zero(p);
        s.c_star = 1.0;
        return s;
    }

    void validate() const {
        params.validate();
        HJMM_REQUIRE(c.size() == static_cast<std::size_t>(2 * params.k + 1), InvalidArgument,
                     "coefficient vector must have length 2k+1");
    }

    /// c[-n] == conj(c[n]) and Im c_star == 0 within tol.
    bool is_hermitian(double tol = 1e-10) const {
        if (std::abs(c_star.imag()) > tol) return false;
        for (int n = 0; n <= k(); ++n) {
            if (std::abs(at(-n) - std::conj(at(n))) > tol) return false;
        }
        return true;
    }

    CoeffState& operator+=(const CoeffState& o) {
        HJMM_REQUIRE(o.c.size() == c.size(), InvalidArgument, "state sum needs equal k");
        c_star += o.c_star;
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += o.c[j];
        return *this;
    }
    CoeffState& operator*=(cplx s) {
        c_star *= s;
        for (auto& v : c) v *= s;
        return *this;
    }
    friend CoeffState operator+(CoeffState a, const CoeffState& b) { return a += b; }
    friend CoeffState operator-(CoeffState a, const CoeffState& b) { return a += (CoeffState(b) *= -1.0); }
    friend CoeffState operator*(cplx s, CoeffState a) { return a *= s; }
};

/// Pi_k on states: keeps c_* and |n| <= k_new.
inline CoeffState truncate(const CoeffState& s, int k_new) {
    HJMM_REQUIRE(k_new >= 0, InvalidArgument, "truncation level must be nonnegative");
    auto out = CoeffState::zero(s.params.with_k(k_new));
    out.c_star = s.c_star;
    const int m = std::min(k_new, s.k());
    for (int n = -m; n <= m; ++n) out.at(n) = s.at(n);
    return out;
}

// ---------------------------------------------------------------------------
// JSON: {"alpha","lambda","T","k","c_star":[re,im],"c":[[re,im],...]}

inline nlohmann::json to_json(const CoeffState& s) {
    nlohmann::json j;
    j["alpha"] = s.params.alpha;
    j["lambda"] = s.params.lambda;
    j["T"] = s.params.horizon_T;
    j["k"] = s.params.k;
    j["c_star"] = {s.c_star.real(), s.c_star.imag()};
    auto arr = nlohmann::json::array();
    for (const auto& v : s.c) arr.push_back({v.real(), v.imag()});
    j["c"] = std::move(arr);
    return j;
}

inline CoeffState coeff_state_from_json(const nlohmann::json& j) {
    try {
        CoeffState s;
        s.params.alpha = j.at("alpha").get<double>();
        s.params.lambda = j.at("lambda").get<double>();
        s.params.horizon_T = j.at("T").get<double>();
        s.params.k = j.at("k").get<int>();
        const auto& cs = j.at("c_star");
        s.c_star = cplx(cs.at(0).get<double>(), cs.at(1).get<double>());
        for (const auto& v : j.at("c")) s.c.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed coefficient JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Basis curves on the grid.

/// g_n as a localized curve.
inline Curve basis_curve(const BasisParams& p, int n, std::size_t intervals = default_period_intervals) {
    return Curve::localized_from(p, 0.0, [&](double x) { return eval_g_n_prime(p, n, x); }, intervals);
}

inline Curve g_star_curve(const BasisParams& p, std::size_t intervals = default_period_intervals) {
    return Curve::localized_from(p, 1.0, [](double) { return cplx{}; }, intervals);
}

/// g_n^*, which is itself localized: its derivative decays by e^{-(lambda+alpha/2)T} per period.
inline Curve dual_curve(const BasisParams& p, int n, std::size_t intervals = default_period_intervals) {
    const double T = p.horizon_T;
    const double K = -std::expm1(-2.0 * p.lambda * T) / std::sqrt(T);
    const cplx z = lambda_value(p, n) + 2.0 * p.lambda;
    // Evaluate the base period directly so the endpoint keeps the left limit.
    return Curve::localized_from(p, 0.0, [&](double r) { return K * std::exp(z * r); }, intervals);
}

// ---------------------------------------------------------------------------
// Pi and Pi_k.

/// Pi h: agrees with h on [0, T] and continues as a localized curve.
inline Curve project_pi(const Curve& h, const BasisParams& p) {
    if (h.localized && *h.localized == p) return h;
    auto base = base_period(h, p.horizon_T);
    Curve out;
    out.value_at_zero = h.value_at_zero;
    out.grid_step = h.grid_step;
    out.localized = p;
    out.deriv_samples.assign(base.begin(), base.end());
    return out;
}

namespace detail {

inline cplx unit_root(long num, std::size_t N) {
    const long m = ((num % static_cast<long>(N)) + static_cast<long>(N)) % static_cast<long>(N);
    const double a = 2.0 * pi * static_cast<double>(m) / static_cast<double>(N);
    return {std::cos(a), std::sin(a)};
}

}  // namespace detail

/// <h, g_n^*>_alpha for h in H_alpha^T:
/// T^{-1/2} int_0^T h'(x) e^{(-2 pi i n / T + lambda + alpha/2) x} dx, by quadrature on h's grid.
///
/// Only the base period of h is read, so for any h this is <Pi h, g_n^*>.
inline cplx coefficient(const Curve& h, const BasisParams& p, int n, const QuadratureSpec& q = {}) {
    auto f = base_period(h, p.horizon_T);
    const std::size_t N = f.size() - 1;
    const auto w = quadrature_weights(N, h.grid_step, q.rule);
    const double d = p.decay();
    cplx acc{};
    for (std::size_t j = 0; j <= N; ++j) {
        acc += w[j] * f[j] * std::exp(d * h.x(j)) * detail::unit_root(-static_cast<long>(n) * static_cast<long>(j), N);
    }
    return acc / std::sqrt(p.horizon_T);
}

/// Coefficient of a curve given by its derivative function on [0, T]; Simpson
/// with doubling until successive estimates differ by less than the tolerance
/// or 2^16 intervals are reached.
inline cplx coefficient(const std::function<cplx(double)>& fprime, const BasisParams& p, int n,
                        const QuadratureSpec& q = {}) {
    const double T = p.horizon_T;
    const cplx z(p.decay(), -2.0 * pi * n / T);
    auto estimate = [&](std::size_t N) {
        const double h = T / static_cast<double>(N);
        const auto w = quadrature_weights(N, h, QuadratureRule::simpson);
        cplx acc{};
        for (std::size_t j = 0; j <= N; ++j) {
            const double x = h * static_cast<double>(j);
            acc += w[j] * fprime(x) * std::exp(z * x);
        }
        return acc / std::sqrt(T);
    };
    std::size_t N = 64;
    cplx prev = estimate(N);
    while (N < (std::size_t{1} << 16)) {
        N *= 2;
        const cplx cur = estimate(N);
        if (std::abs(cur - prev) < q.tolerance) return cur;
        prev = cur;
    }
    return prev;
}

/// All coefficients for n = -k..k from one DFT of the weighted samples
/// w_j h'(x_j) e^{(lambda + alpha/2) x_j}; c_* = h(0).
inline CoeffState coefficients_fft(const Curve& h, const BasisParams& p, const QuadratureSpec& q = {}) {
    p.validate();
    auto f = base_period(h, p.horizon_T);
    const std::size_t N = f.size() - 1;
    HJMM_REQUIRE(static_cast<std::size_t>(2 * p.k + 1) <= N, InvalidArgument,
                 "grid too coarse for the requested truncation level");
    const auto w = quadrature_weights(N, h.grid_step, q.rule);
    const double d = p.decay();
    std::vector<cplx> s(N);
    for (std::size_t j = 0; j < N; ++j) s[j] = w[j] * f[j] * std::exp(d * h.x(j));
    s[0] += w[N] * f[N] * std::exp(d * p.horizon_T);
    fft::transform(s, fft::Direction::forward);
    auto out = CoeffState::zero(p);
    out.c_star = h.value_at_zero;
    const double scale = 1.0 / std::sqrt(p.horizon_T);
    for (int n = -p.k; n <= p.k; ++n) out.at(n) = scale * s[fft::slot(n, N)];
    return out;
}

/// Pi_k h = h(0) g_* + sum_{|n|<=k} <h, g_n^*> g_n, reading h on [0, T].
inline CoeffState project_pi_k(const Curve& h, const BasisParams& p, const QuadratureSpec& q = {}) {
    return coefficients_fft(h, p, q);
}

/// Lambda_k = Pi_k Pi.
inline CoeffState lambda_k(const Curve& h, const BasisParams& p, const QuadratureSpec& q = {}) {
    return project_pi_k(project_pi(h, p), p, q);
}

// ---------------------------------------------------------------------------
// Reconstruction.

inline cplx reconstruct(const CoeffState& s, double x) {
    cplx acc = s.c_star;
    for (int n = -s.k(); n <= s.k(); ++n) acc += s.at(n) * eval_g_n(s.params, n, x);
    return acc;
}

inline cplx reconstruct_derivative(const CoeffState& s, double x) {
    cplx acc{};
    for (int n = -s.k(); n <= s.k(); ++n) acc += s.at(n) * eval_g_n_prime(s.params, n, x);
    return acc;
}

/// Values at x_j = j T / N, j = 0..N, via one inverse DFT (N >= 2k+1).
inline std::vector<cplx> reconstruct_grid(const CoeffState& s, std::size_t N) {
    const BasisParams& p = s.params;
    HJMM_REQUIRE(N >= static_cast<std::size_t>(2 * p.k + 1), InvalidArgument, "reconstruction grid too coarse");
    const double sqT = std::sqrt(p.horizon_T);
    std::vector<cplx> buf(N);
    cplx offset = s.c_star;
    for (int n = -p.k; n <= p.k; ++n) {
        const cplx r = s.at(n) / lambda_value(p, n);
        buf[fft::slot(n, N)] += r;
        offset -= r / sqT;
    }
    fft::transform(buf, fft::Direction::backward);
    std::vector<cplx> out(N + 1);
    const double d = p.decay();
    const double h = p.horizon_T / static_cast<double>(N);
    for (std::size_t j = 0; j <= N; ++j) {
        const cplx b = buf[j % N];
        out[j] = offset + std::exp(-d * h * static_cast<double>(j)) * b / sqT;
    }
    return out;
}

/// The state as a localized curve with N intervals per period (N >= 2k+1).
inline Curve to_curve(const CoeffState& s, std::size_t N = default_period_intervals) {
    const BasisParams& p = s.params;
    HJMM_REQUIRE(N >= static_cast<std::size_t>(2 * p.k + 1), InvalidArgument, "curve grid too coarse");
    std::vector<cplx> buf(N);
    for (int n = -p.k; n <= p.k; ++n) buf[fft::slot(n, N)] += s.at(n);
    fft::transform(buf, fft::Direction::backward);
    Curve c;
    c.value_at_zero = s.c_star;
    c.grid_step = p.horizon_T / static_cast<double>(N);
    c.localized = p;
    c.deriv_samples.resize(N + 1);
    const double sqT = std::sqrt(p.horizon_T);
    for (std::size_t j = 0; j <= N; ++j) {
        c.deriv_samples[j] = std::exp(-p.decay() * c.x(j)) * buf[j % N] / sqT;
    }
    return c;
}

/// Precomputed g_n(x_j) on fixed abscissae, for repeated reconstruction.
class BasisTable {
public:
    BasisTable(const BasisParams& p, std::vector<double> xs) : params_(p), xs_(std::move(xs)) {
        const std::size_t width = static_cast<std::size_t>(2 * p.k + 1);
        table_.resize(width * xs_.size());
        for (int n = -p.k; n <= p.k; ++n) {
            for (std::size_t j = 0; j < xs_.size(); ++j) {
                table_[static_cast<std::size_t>(n + p.k) * xs_.size() + j] = eval_g_n(p, n, xs_[j]);
            }
        }
    }

    const std::vector<double>& abscissae() const { return xs_; }
    const BasisParams& params() const { return params_; }

    /// Values of a state with k <= table k at every abscissa.
    std::vector<cplx> values(const CoeffState& s) const {
        HJMM_REQUIRE(s.k() <= params_.k, InvalidArgument, "state exceeds table truncation");
        std::vector<cplx> out(xs_.size(), s.c_star);
        const std::size_t m = xs_.size();
        for (int n = -s.k(); n <= s.k(); ++n) {
            const cplx a = s.at(n);
            if (a == cplx{}) continue;
            const cplx* row = table_.data() + static_cast<std::size_t>(n + params_.k) * m;
            for (std::size_t j = 0; j < m; ++j) out[j] += a * row[j];
        }
        return out;
    }

private:
    BasisParams params_;
    std::vector<double> xs_;
    std::vector<cplx> table_;
};

// ---------------------------------------------------------------------------
// Norms in coefficient space.

/// ||c_* g_* + sum c_n g_n||_alpha^2 from <g_n, g_m> = 1 / (T (2 lambda - 2 pi i (n-m)/T)).
inline double state_norm_sq(const CoeffState& s) {
    const BasisParams& p = s.params;
    const double T = p.horizon_T;
    const int k = s.k();
    std::vector<cplx> gram(static_cast<std::size_t>(4 * k + 1));
    for (int d = -2 * k; d <= 2 * k; ++d) {
        gram[static_cast<std::size_t>(d + 2 * k)] = 1.0 / (T * cplx(2.0 * p.lambda, -2.0 * pi * d / T));
    }
    cplx acc{};
    for (int n = -k; n <= k; ++n) {
        cplx row{};
        for (int m = -k; m <= k; ++m) row += std::conj(s.at(m)) * gram[static_cast<std::size_t>(n - m + 2 * k)];
        acc += s.at(n) * row;
    }
    return std::norm(s.c_star) + acc.real();
}

inline double state_norm(const CoeffState& s) { return std::sqrt(std::max(0.0, state_norm_sq(s))); }

/// |c_*|^2 + sum |c_n|^2, the coefficient side of the frame inequality.
inline double coefficient_energy(const CoeffState& s) {
    double e = std::norm(s.c_star);
    for (const auto& v : s.c) e += std::norm(v);
    return e;
}

/// ||sum_n a_n g_n^*||_alpha^2 for a_n given on n = n0 .. n0 + a.size() - 1.
///
/// Gram entries <g_n^*, g_m^*> = (1 - e^{-2 lambda T})(e^{2 lambda T} - 1) / (T (2 lambda + 2 pi i (n-m)/T));
/// the Toeplitz form is evaluated through the autocorrelation of a (FFT).
inline double dual_norm_sq(const BasisParams& p, std::span<const cplx> a) {
    const std::size_t L = a.size();
    if (L == 0) return 0.0;
    const std::size_t M = fft::next_pow2(2 * L);
    std::vector<cplx> buf(M);
    std::copy(a.begin(), a.end(), buf.begin());
    fft::transform(buf, fft::Direction::forward);
    for (auto& v : buf) v = std::norm(v);
    fft::transform(buf, fft::Direction::backward);
    // buf[slot(d)] / M = sum_n a_{n+d} conj(a_n)
    const double T = p.horizon_T;
    const double pref = -std::expm1(-2.0 * p.lambda * T) * std::expm1(2.0 * p.lambda * T) / T;
    double acc = 0.0;
    const long Ll = static_cast<long>(L);
    for (long d = -(Ll - 1); d <= Ll - 1; ++d) {
        const cplx r = buf[fft::slot(static_cast<int>(d), M)] / static_cast<double>(M);
        acc += (r / cplx(2.0 * p.lambda, 2.0 * pi * static_cast<double>(d) / T)).real();
    }
    return pref * acc;
}

// ---------------------------------------------------------------------------
// Commutator and rate constants.

inline constexpr int default_series_horizon = 512;
inline constexpr int certification_horizon = 4096;

/// <h, c_{k,t}>: sum_{k < |n| <= N_max} g_n(t) <h, g_n^*>, from one coefficient transform.
///
/// N_max is capped by the grid's resolvable frequencies.
inline cplx commutator_apply(const Curve& h, const BasisParams& p, double t, int n_max = default_series_horizon) {
    const auto N = base_period(h, p.horizon_T).size() - 1;
    const int cap = std::min(n_max, static_cast<int>((N - 1) / 2));
    if (cap <= p.k) return {};
    const auto coeffs = coefficients_fft(h, p.with_k(cap));
    cplx acc{};
    for (int n = p.k + 1; n <= cap; ++n) {
        acc += eval_g_n(p, n, t) * coeffs.at(n) + eval_g_n(p, -n, t) * coeffs.at(-n);
    }
    return acc;
}

struct CommutatorElement {
    double t = 0.0;
    int k = 0;
    double norm_sq_bound = 0.0;  ///< certified upper bound of ||c_{k,t}||_alpha^2
    double series_norm_sq = 0.0; ///< truncated-series value
};

/// C_2 = T / (pi^2 (1 - e^{-2 lambda T})).
inline double compute_C2(const BasisParams& p) {
    p.validate();
    return p.horizon_T / (pi * pi * -std::expm1(-2.0 * p.lambda * p.horizon_T));
}

/// ||c_{k,t}||^2 with c_{k,t} = sum_{|n|>k} g_n(t) g_n^*: exact Gram form up to
/// |n| <= horizon plus a certified bound for the remaining tail.
inline CommutatorElement c_kt_norm(const BasisParams& p, int k, double t, int horizon = certification_horizon) {
    HJMM_REQUIRE(horizon > k, InvalidArgument, "series horizon must exceed k");
    const int L = 2 * horizon + 1;
    std::vector<cplx> a(static_cast<std::size_t>(L));
    for (int n = -horizon; n <= horizon; ++n) {
        if (std::abs(n) > k) a[static_cast<std::size_t>(n + horizon)] = std::conj(eval_g_n(p, n, t));
    }
    CommutatorElement e;
    e.t = t;
    e.k = k;
    e.series_norm_sq = std::max(0.0, dual_norm_sq(p, a));
    // sum_{|n|>N} |g_n(t)|^2 <= (1 + e^{-d t})^2 T / (2 pi^2 N); upper Riesz bound of g_n^* is e^{2 lambda T} - 1.
    const double T = p.horizon_T;
    const double amp = 1.0 + std::exp(-p.decay() * t);
    const double tail = std::expm1(2.0 * p.lambda * T) * amp * amp * T / (2.0 * pi * pi * horizon);
    const double root = std::sqrt(e.series_norm_sq) + std::sqrt(tail);
    e.norm_sq_bound = root * root;
    return e;
}

/// Second derivative of the base period by centered differences (one-sided, second order, at the ends).
inline std::vector<cplx> second_derivative(std::span<const cplx> d, double h) {
    const std::size_t n = d.size();
    HJMM_REQUIRE(n >= 3, InvalidArgument, "need at least three samples");
    std::vector<cplx> out(n);
    for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (d[j + 1] - d[j - 1]) / (2.0 * h);
    out[0] = (-3.0 * d[0] + 4.0 * d[1] - d[2]) / (2.0 * h);
    out[n - 1] = (3.0 * d[n - 1] - 4.0 * d[n - 2] + d[n - 3]) / (2.0 * h);
    return out;
}

/// C_1 = T [ |f'(T) e^{T(lambda+alpha/2)} - f'(0)|^2 + (int_0^T |f''| e^{x(lambda+alpha/2)} dx)^2 ]
///       / (pi^2 (1 - e^{-2 lambda T})).
///
/// Raises NotSmoothEnough when f'' is not resolved: max |f''| grows under refinement.
inline double compute_C1(const Curve& f, const BasisParams& p) {
    auto d1 = base_period(f, p.horizon_T);
    const double h = f.grid_step;
    const double T = p.horizon_T;
    const double dec = p.decay();
    for (const auto& v : d1) HJMM_REQUIRE(std::isfinite(v.real()) && std::isfinite(v.imag()), NotSmoothEnough,
                                          "derivative samples are not finite");
    const auto d2 = second_derivative(d1, h);
    const std::size_t N = d1.size() - 1;
    if (N >= 8 && N % 2 == 0) {
        std::vector<cplx> coarse(N / 2 + 1);
        for (std::size_t j = 0; j < coarse.size(); ++j) coarse[j] = d1[2 * j];
        const auto d2c = second_derivative(coarse, 2.0 * h);
        double fine_max = 0.0, coarse_max = 0.0;
        for (const auto& v : d2) fine_max = std::max(fine_max, std::abs(v));
        for (const auto& v : d2c) coarse_max = std::max(coarse_max, std::abs(v));
        double scale = 0.0;
        for (const auto& v : d1) scale = std::max(scale, std::abs(v));
        HJMM_REQUIRE(fine_max <= 1.5 * coarse_max + 1e-8 * (1.0 + scale / T), NotSmoothEnough,
                     "second derivative does not settle under refinement");
    }
    std::vector<double> weighted(d2.size());
    for (std::size_t j = 0; j < d2.size(); ++j) weighted[j] = std::abs(d2[j]) * std::exp(dec * f.x(j));
    const double var = integrate_samples<double>(weighted, h, QuadratureRule::simpson);
    const double jump = std::abs(d1[N] * std::exp(dec * T) - d1[0]);
    return T * (jump * jump + var * var) / (pi * pi * -std::expm1(-2.0 * p.lambda * T));
}

/// ||f - Pi_k f||_alpha^2 for f in H_alpha^T, evaluated with inner_product_alpha on the grid.
inline double truncation_error_sq(const Curve& f, const BasisParams& p, const QuadratureSpec& q = {}) {
    const Curve pf = project_pi(f, p);
    const auto s = project_pi_k(pf, p, q);
    const std::size_t N = pf.intervals();
    const Curve approx = to_curve(s, N);
    Curve diff = pf;
    diff.value_at_zero -= approx.value_at_zero;
    for (std::size_t j = 0; j < diff.deriv_samples.size(); ++j) diff.deriv_samples[j] -= approx.deriv_samples[j];
    return std::max(0.0, inner_product_alpha(diff, diff, p.alpha, q).real());
}

// ---------------------------------------------------------------------------
// Operator-norm estimates.

/// Pi^* for the H_alpha inner product, returned as a plain curve on [0, T].
///
/// In Theta coordinates Pi^* g(r) = sum_m e^{-lambda m T} g(r + m T) on [0, T).
inline Curve pi_adjoint(const Curve& y, const BasisParams& p) {
    const double T = p.horizon_T;
    const double h = y.grid_step;
    const auto nT = grid_index(T, h);
    HJMM_REQUIRE(nT.has_value(), GridMismatch, "T must be a grid multiple");
    Curve out;
    out.value_at_zero = y.value_at_zero;
    out.grid_step = h;
    out.deriv_samples.assign(*nT + 1, cplx{});
    const double a2 = 0.5 * p.alpha;
    // Theta image of y sampled period by period, including the localized tail.
    long periods = 0;
    if (y.localized) {
        const double per = 2.0 * p.lambda * T;
        periods = static_cast<long>(std::ceil(40.0 / per)) + 1;
    } else {
        periods = static_cast<long>(std::ceil(y.x_max() / T - 1e-12));
    }
    for (long m = 0; m < periods; ++m) {
        const double damp = std::exp(-p.lambda * T * static_cast<double>(m));
        for (std::size_t j = 0; j <= *nT; ++j) {
            const double x = T * static_cast<double>(m) + h * static_cast<double>(j);
            cplx dy;
            if (y.localized) {
                dy = std::pow(y.localized->period_decay(), static_cast<double>(m)) * y.deriv_samples[j];
            } else {
                const std::size_t idx = static_cast<std::size_t>(m) * *nT + j;
                if (idx > y.intervals()) break;
                dy = y.deriv_samples[idx];
            }
            const cplx g = std::exp(a2 * x) * dy;
            out.deriv_samples[j] += damp * g;
        }
    }
    // back from Theta coordinates on [0, T]
    for (std::size_t j = 0; j <= *nT; ++j) out.deriv_samples[j] *= std::exp(-a2 * out.x(j));
    return out;
}

/// Power iteration on Pi^* Pi from a seeded random curve on [0, 2T]; returns the estimate of ||Pi||.
inline double estimate_pi_norm(const BasisParams& p, std::uint64_t seed, int iterations = 40,
                               std::size_t intervals_per_period = 512) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const double T = p.horizon_T;
    Curve h;
    h.grid_step = T / static_cast<double>(intervals_per_period);
    h.value_at_zero = nd(rng);
    h.deriv_samples.resize(2 * intervals_per_period + 1);
    for (auto& v : h.deriv_samples) v = nd(rng);
    double est = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const double nh = norm_alpha(h, p.alpha);
        h = (1.0 / nh) * h;
        const Curve ph = project_pi(h, p);
        est = norm_alpha(ph, p.alpha);
        h = pi_adjoint(ph, p);
    }
    return est;
}

}  // namespace hjmm
