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

// Deterministic-coefficient forward dynamics df = (d/dx f + beta) dt + Psi dL:
// fine-grid mild-solution oracle, exact finite-rank simulation through the
// state variables, the explicit Euler coefficient system and delivery-period
// forwards.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hjmm/basis.hpp"
#include "hjmm/curve.hpp"
#include "hjmm/driver.hpp"
#include "hjmm/filipovic.hpp"
#include "hjmm/projection.hpp"
#include "hjmm/shift.hpp"

namespace hjmm {

/// Uniform simulation grid t_j = j dt, j = 0..n_steps.
struct TimeGrid {
    double dt = 0.0;
    std::size_t n_steps = 0;

    double time(std::size_t j) const { return dt * static_cast<double>(j); }
    double horizon() const { return time(n_steps); }

    std::vector<double> times() const {
        std::vector<double> out(n_steps + 1);
        for (std::size_t j = 0; j <= n_steps; ++j) out[j] = time(j);
        return out;
    }

    /// Grid reaching t_end exactly; dt must divide t_end.
    static TimeGrid uniform(double t_end, double dt) {
        HJMM_REQUIRE(dt > 0.0 && t_end >= 0.0, InvalidArgument, "time step must be positive");
        const auto n = grid_index(t_end, dt);
        HJMM_REQUIRE(n.has_value(), InvalidArgument, "time step must divide the horizon");
        return {dt, *n};
    }
};

/// Model with separable coefficients: beta(t) = a(t) beta_shape and
/// Psi(t) L = sum_i w_i(t) loading_i L_i.
struct ModelSpec {
    BasisParams params;
    Curve f0;
    std::optional<Curve> beta_shape;
    std::function<double(double)> beta_scale;
    std::vector<std::function<double(double)>> psi_weights;

    double drift_scale(double t) const { return beta_scale ? beta_scale(t) : 1.0; }

    double weight(std::size_t i, double t) const {
        if (i < psi_weights.size() && psi_weights[i]) return psi_weights[i](t);
        return 1.0;
    }

    bool has_drift() const { return beta_shape.has_value(); }

    /// beta(t) on the beta grid; the zero curve on f0's grid when there is no drift.
    Curve beta(double t) const {
        if (!beta_shape) {
            Curve z = f0;
            z.value_at_zero = 0.0;
            std::fill(z.deriv_samples.begin(), z.deriv_samples.end(), cplx{});
            return z;
        }
        return drift_scale(t) * *beta_shape;
    }

    /// Column i of Psi(t): w_i(t) loading_i.
    Curve psi_column(const LevyDriver& driver, std::size_t i, double t) const {
        return weight(i, t) * driver.loadings.at(i);
    }

    void validate(const LevyDriver& driver) const {
        params.validate();
        f0.validate();
        base_period(f0, params.horizon_T);
        auto check = [&](const Curve& c, const char* what) {
            c.validate();
            HJMM_REQUIRE(same_step(c, f0), GridMismatch, std::string(what) + " must share the f0 grid");
            base_period(c, params.horizon_T);
        };
        if (beta_shape) check(*beta_shape, "beta");
        for (const auto& l : driver.loadings) check(l, "loading");
        driver.validate();
    }
};

/// Time-indexed states of one path. Approximation runs fill `states`,
/// oracle runs fill `curves`; both keep the noise that produced them.
struct SimPath {
    std::vector<double> times;
    std::vector<CoeffState> states;
    std::vector<Curve> curves;
    NoiseRecord noise_record;
};

/// S_k(t), U_n(t) and the driver integrals X_n(t), X_*(t) on the time grid.
struct StateVariables {
    std::vector<cplx> S_k;
    std::vector<std::vector<cplx>> U;  ///< U[j][n + k]
    std::vector<std::vector<cplx>> X;  ///< X[j][n + k]
    std::vector<cplx> X_star;
};

// ---------------------------------------------------------------------------
// Fine-grid oracle.

namespace detail {

// f += s g over f's extent; g must share the step and cover it.
inline void add_restricted(Curve& f, const Curve& g, cplx s) {
    HJMM_REQUIRE(same_step(f, g), GridMismatch, "curves on different grids");
    f.value_at_zero += s * g.value_at_zero;
    if (g.localized) {
        for (std::size_t j = 0; j < f.deriv_samples.size(); ++j) f.deriv_samples[j] += s * derivative_at(g, f.x(j));
        return;
    }
    HJMM_REQUIRE(g.intervals() >= f.intervals(), DomainTooShort, "increment curve shorter than the state");
    for (std::size_t j = 0; j < f.deriv_samples.size(); ++j) f.deriv_samples[j] += s * g.deriv_samples[j];
}

inline void check_step(const TimeGrid& grid, const Curve& f0) {
    HJMM_REQUIRE(grid_index(grid.dt, f0.grid_step).has_value(), GridMismatch,
                 "time step must be a multiple of the curve grid step");
}

}  // namespace detail

/// Left-Riemann mild solution f(t_{j+1}) = U_dt (f(t_j) + beta(t_j) dt + Psi(t_j) dL_j) on the fine grid.
///
/// The represented extent shrinks by dt per step; DomainTooShort is raised when
/// the curves no longer cover [0, T - t].
inline SimPath oracle_mild_solution(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& grid,
                                    const NoiseRecord& noise) {
    spec.validate(driver);
    detail::check_step(grid, spec.f0);
    HJMM_REQUIRE(noise.n_steps >= grid.n_steps && noise.rank == driver.rank(), InvalidArgument,
                 "noise record does not match the grid");
    const double T = spec.params.horizon_T;
    HJMM_REQUIRE(spec.f0.x_max() - grid.horizon() >= T - grid.horizon() - 1e-12, DomainTooShort,
                 "initial curve too short for the horizon");
    SimPath path;
    path.times = grid.times();
    path.noise_record = noise;
    path.curves.reserve(grid.n_steps + 1);
    path.curves.push_back(spec.f0);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        Curve f = path.curves.back();
        if (spec.has_drift()) detail::add_restricted(f, spec.beta(s), grid.dt);
        for (std::size_t i = 0; i < driver.rank(); ++i) {
            const double dl = noise.at(j, i);
            if (dl != 0.0) detail::add_restricted(f, driver.loadings[i], spec.weight(i, s) * dl);
        }
        HJMM_REQUIRE(f.x_max() - grid.dt >= T - grid.time(j + 1) - 1e-12, DomainTooShort,
                     "transported curve exhausted the grid");
        path.curves.push_back(shift_curve(f, grid.dt));
    }
    return path;
}

/// Pointwise mild solution at one time on fixed abscissae, from precomputed
/// value tables. Equal to oracle_mild_solution on the same noise up to interpolation.
class PointOracle {
public:
    PointOracle(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& grid, std::vector<double> xs)
        : xs_(std::move(xs)), n_steps_(grid.n_steps), rank_(driver.rank()) {
        spec.validate(driver);
        detail::check_step(grid, spec.f0);
        const double t = grid.horizon();
        const std::size_t m = xs_.size();
        CurveEvaluator f0ev(spec.f0);
        base_.resize(m);
        for (std::size_t q = 0; q < m; ++q) base_[q] = f0ev.value(t + xs_[q]);
        std::vector<CurveEvaluator> lev;
        for (const auto& l : driver.loadings) lev.emplace_back(l);
        loading_.assign(n_steps_ * rank_ * m, cplx{});
        if (spec.has_drift()) {
            CurveEvaluator bev(*spec.beta_shape);
            for (std::size_t j = 0; j < n_steps_; ++j) {
                const double s = grid.time(j);
                const double a = spec.drift_scale(s) * grid.dt;
                for (std::size_t q = 0; q < m; ++q) base_[q] += a * bev.value(t - s + xs_[q]);
            }
        }
        for (std::size_t j = 0; j < n_steps_; ++j) {
            const double s = grid.time(j);
            for (std::size_t i = 0; i < rank_; ++i) {
                const double w = spec.weight(i, s);
                cplx* row = loading_.data() + (j * rank_ + i) * m;
                for (std::size_t q = 0; q < m; ++q) row[q] = w * lev[i].value(t - s + xs_[q]);
            }
        }
    }

    const std::vector<double>& abscissae() const { return xs_; }

    std::vector<cplx> values(const NoiseRecord& noise) const {
        std::vector<cplx> out = base_;
        const std::size_t m = xs_.size();
        for (std::size_t j = 0; j < n_steps_; ++j) {
            for (std::size_t i = 0; i < rank_; ++i) {
                const double dl = noise.at(j, i);
                const cplx* row = loading_.data() + (j * rank_ + i) * m;
                for (std::size_t q = 0; q < m; ++q) out[q] += dl * row[q];
            }
        }
        return out;
    }

private:
    std::vector<double> xs_;
    std::size_t n_steps_;
    std::size_t rank_;
    std::vector<cplx> base_;
    std::vector<cplx> loading_;
};

// ---------------------------------------------------------------------------
// Finite-rank approximation.

/// Lambda_k images of the model inputs, reused across steps.
struct ProjectedModel {
    CoeffState f0;
    std::optional<CoeffState> beta_shape;
    std::vector<CoeffState> loadings;
};

inline ProjectedModel project_model(const ModelSpec& spec, const LevyDriver& driver, int k) {
    const BasisParams p = spec.params.with_k(k);
    ProjectedModel pm;
    pm.f0 = lambda_k(spec.f0, p);
    if (spec.beta_shape) pm.beta_shape = lambda_k(*spec.beta_shape, p);
    for (const auto& l : driver.loadings) pm.loadings.push_back(lambda_k(l, p));
    return pm;
}

/// Coefficients of Lambda_k(beta dt + sum_i psi_i dL_i) from projected pieces.
inline CoeffState assemble_increment(const std::optional<CoeffState>& beta_bar, std::span<const CoeffState> psi_bar,
                                     std::span<const double> dl, double dt, const BasisParams& p) {
    CoeffState out = CoeffState::zero(p);
    if (beta_bar) {
        out.c_star += beta_bar->c_star * dt;
        for (std::size_t j = 0; j < out.c.size(); ++j) out.c[j] += beta_bar->c[j] * dt;
    }
    for (std::size_t i = 0; i < psi_bar.size(); ++i) {
        if (dl[i] == 0.0) continue;
        out.c_star += psi_bar[i].c_star * dl[i];
        for (std::size_t j = 0; j < out.c.size(); ++j) out.c[j] += psi_bar[i].c[j] * dl[i];
    }
    return out;
}

namespace detail {

inline CoeffState model_increment(const ProjectedModel& pm, const ModelSpec& spec, const NoiseRecord& noise,
                                  std::size_t step, double s, double dt, const BasisParams& p) {
    CoeffState out = CoeffState::zero(p);
    if (pm.beta_shape) {
        const double a = spec.drift_scale(s) * dt;
        out.c_star += a * pm.beta_shape->c_star;
        for (std::size_t j = 0; j < out.c.size(); ++j) out.c[j] += a * pm.beta_shape->c[j];
    }
    for (std::size_t i = 0; i < pm.loadings.size(); ++i) {
        const double dl = noise.at(step, i);
        if (dl == 0.0) continue;
        const double a = spec.weight(i, s) * dl;
        out.c_star += a * pm.loadings[i].c_star;
        for (std::size_t j = 0; j < out.c.size(); ++j) out.c[j] += a * pm.loadings[i].c[j];
    }
    return out;
}

}  // namespace detail

/// f_k by exact transport of the state variables:
/// x(t_{j+1}) = U_dt (x(t_j) + Lambda_k(beta(t_j) dt + Psi(t_j) dL_j)).
///
/// In components U_n <- e^{lambda_n dt}(U_n + dX_n) and
/// S_k <- S_k + dX_* + sum_n g_n(dt)(U_n + dX_n), so S_k(t) = c_*(t) throughout.
inline std::pair<SimPath, StateVariables> simulate_fk_state(const ModelSpec& spec, const LevyDriver& driver,
                                                            const TimeGrid& grid, int k, const NoiseRecord& noise) {
    spec.validate(driver);
    HJMM_REQUIRE(noise.n_steps >= grid.n_steps && noise.rank == driver.rank(), InvalidArgument,
                 "noise record does not match the grid");
    const BasisParams p = spec.params.with_k(k);
    const ProjectedModel pm = project_model(spec, driver, k);
    const ShiftCache shift(p, grid.dt);
    SimPath path;
    path.times = grid.times();
    path.noise_record = noise;
    StateVariables sv;
    CoeffState x = pm.f0;
    std::vector<cplx> X(x.c.size());
    cplx X_star{};
    auto record = [&]() {
        path.states.push_back(x);
        sv.S_k.push_back(x.c_star);
        sv.U.push_back(x.c);
        sv.X.push_back(X);
        sv.X_star.push_back(X_star);
    };
    record();
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const CoeffState dx = detail::model_increment(pm, spec, noise, j, grid.time(j), grid.dt, p);
        X_star += dx.c_star;
        for (std::size_t q = 0; q < X.size(); ++q) X[q] += dx.c[q];
        x += dx;
        shift.apply(x);
        record();
    }
    return {std::move(path), std::move(sv)};
}

/// A x for the 2k+2 system: d c_* = sum_n c_n / sqrt T, d c_n = lambda_n c_n.
inline CoeffState apply_generator(const CoeffState& s) {
    CoeffState out = CoeffState::zero(s.params);
    const double isq = 1.0 / std::sqrt(s.params.horizon_T);
    for (int n = -s.k(); n <= s.k(); ++n) {
        out.c_star += s.at(n) * isq;
        out.at(n) = lambda_value(s.params, n) * s.at(n);
    }
    return out;
}

/// Throws UnstableStep unless |1 + lambda_n dt| < 1 for every |n| <= k.
inline void check_euler_stability(const BasisParams& p, double dt) {
    for (int n = 0; n <= p.k; ++n) {
        const double amp = std::abs(1.0 + lambda_value(p, n) * dt);
        if (amp >= 1.0) {
            throw UnstableStep("explicit Euler step " + std::to_string(dt) + " unstable for mode n = " +
                               std::to_string(n) + " (|1 + lambda_n dt| = " + std::to_string(amp) + ")");
        }
    }
}

/// x + dt A x + dx.
inline CoeffState euler_step(const CoeffState& x, const CoeffState& dx, double dt) {
    CoeffState out = x;
    const double isq = dt / std::sqrt(x.params.horizon_T);
    for (int n = -x.k(); n <= x.k(); ++n) {
        out.c_star += x.at(n) * isq;
        out.at(n) += lambda_value(x.params, n) * dt * x.at(n);
    }
    out += dx;
    return out;
}

/// Explicit Euler on the 2k+2 coefficient system with b_k = Lambda_k beta(t) and psi_k = Lambda_k Psi(t).
inline SimPath euler_coefficient_system(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& grid,
                                        int k, const NoiseRecord& noise) {
    spec.validate(driver);
    const BasisParams p = spec.params.with_k(k);
    check_euler_stability(p, grid.dt);
    HJMM_REQUIRE(noise.n_steps >= grid.n_steps && noise.rank == driver.rank(), InvalidArgument,
                 "noise record does not match the grid");
    SimPath path;
    path.times = grid.times();
    path.noise_record = noise;
    CoeffState x = lambda_k(spec.f0, p);
    path.states.push_back(x);
    std::vector<CoeffState> psi_bar(driver.rank());
    std::vector<double> dl(driver.rank());
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        std::optional<CoeffState> beta_bar;
        if (spec.has_drift()) beta_bar = lambda_k(spec.beta(s), p);
        for (std::size_t i = 0; i < driver.rank(); ++i) {
            psi_bar[i] = lambda_k(spec.psi_column(driver, i, s), p);
            dl[i] = noise.at(j, i);
        }
        x = euler_step(x, assemble_increment(beta_bar, psi_bar, dl, grid.dt, p), grid.dt);
        path.states.push_back(x);
    }
    return path;
}

// ---------------------------------------------------------------------------
// Delivery-period forwards.

namespace detail {

// (e^z - 1 - z) / z^2
inline cplx phi2(cplx z) {
    if (std::abs(z) < 1e-2) {
        return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z * (1.0 / 720.0 + z / 5040.0))));
    }
    return (exprel(z, 1.0) - 1.0) / z;
}

}  // namespace detail

/// G_n(t, T1, T2) = (e^{lambda_n (T2-t)} - e^{lambda_n (T1-t)} - lambda_n (T2-T1)) / (lambda_n^2 sqrt T (T2-T1)),
/// rearranged as g_n(T1-t) + e^{lambda_n (T1-t)} phi2(lambda_n w) w / sqrt T with w = T2 - T1.
inline cplx delivery_weight(const BasisParams& p, int n, double t, double T1, double T2) {
    const cplx ln = lambda_value(p, n);
    const double a = T1 - t;
    const double w = T2 - T1;
    return eval_g_n(p, n, a) + std::exp(ln * a) * detail::phi2(ln * w) * w / std::sqrt(p.horizon_T);
}

/// F(t, T1, T2) = S_k(t) + sum_n G_n(t, T1, T2) U_n(t), the average of f_k(t, s - t) over s in [T1, T2].
inline cplx delivery_forward(const CoeffState& state, double t, double T1, double T2) {
    HJMM_REQUIRE(t >= 0.0 && t <= T1 && T1 < T2 && T2 <= state.params.horizon_T, BadWindow,
                 "delivery window must satisfy t <= T1 < T2 <= T");
    cplx acc = state.c_star;
    for (int n = -state.k(); n <= state.k(); ++n) acc += state.at(n) * delivery_weight(state.params, n, t, T1, T2);
    return acc;
}

// ---------------------------------------------------------------------------
// Monte-Carlo experiments.

/// x_m = m (T - t) / (points - 1), m = 0..points-1.
inline std::vector<double> sup_grid(double T, double t, std::size_t points = 1024) {
    HJMM_REQUIRE(points >= 2 && t <= T, InvalidArgument, "bad sup grid");
    std::vector<double> xs(points);
    for (std::size_t m = 0; m < points; ++m) xs[m] = (T - t) * static_cast<double>(m) / static_cast<double>(points - 1);
    return xs;
}

struct ConvergenceRow {
    int k = 0;
    double mc_error = 0.0;  ///< mean of sup_x |f_k - f|^2
    double stderr_ = 0.0;
    double bound = 0.0;     ///< A(t) / k
};

/// Sampled pieces of the rate constant A(t).
struct RateConstant {
    double A = 0.0;
    double mean_C1 = 0.0;
    double norm_pi_f0_sq = 0.0;
    double trace_integral = 0.0;
    double drift_integral = 0.0;
};

struct ConvergenceSettings {
    double t_eval = 0.5;
    double dt = 1.0 / 256.0;
    std::vector<int> k_list{4, 8, 16, 32, 64};
    std::size_t n_paths = 1000;
    std::size_t sup_points = 1024;
    std::size_t bound_points = 512;  ///< grid on [0, T] for the pathwise C_1 estimate
    std::uint64_t path_offset = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    RateConstant rate;
};

namespace detail {

// d/dx f_Pi(t, y) on y_m = m T / M (the last point is a left limit), linear in the noise.
class PiDerivativeTable {
public:
    PiDerivativeTable(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& grid, std::size_t M)
        : M_(M), n_steps_(grid.n_steps), rank_(driver.rank()) {
        const BasisParams& p = spec.params;
        const double T = p.horizon_T;
        const double t = grid.horizon();
        ys_.resize(M + 1);
        for (std::size_t m = 0; m <= M; ++m) ys_[m] = T * static_cast<double>(m) / static_cast<double>(M);
        ys_[M] = T * (1.0 - 1e-9);
        const Curve pf0 = project_pi(spec.f0, p);
        base_.resize(M + 1);
        for (std::size_t m = 0; m <= M; ++m) base_[m] = derivative_at(pf0, t + ys_[m]);
        if (spec.has_drift()) {
            const Curve pb = project_pi(*spec.beta_shape, p);
            for (std::size_t j = 0; j < n_steps_; ++j) {
                const double s = grid.time(j);
                const double a = spec.drift_scale(s) * grid.dt;
                for (std::size_t m = 0; m <= M; ++m) base_[m] += a * derivative_at(pb, t - s + ys_[m]);
            }
        }
        table_.assign(n_steps_ * rank_ * (M + 1), cplx{});
        for (std::size_t i = 0; i < rank_; ++i) {
            const Curve pl = project_pi(driver.loadings[i], p);
            for (std::size_t j = 0; j < n_steps_; ++j) {
                const double s = grid.time(j);
                const double w = spec.weight(i, s);
                cplx* row = table_.data() + (j * rank_ + i) * (M + 1);
                for (std::size_t m = 0; m <= M; ++m) row[m] = w * derivative_at(pl, t - s + ys_[m]);
            }
        }
    }

    // Pathwise C_1 of f_Pi(t), with the weighted variation of f' in place of int |f''| e^{dx}.
    double c1(const NoiseRecord& noise, const BasisParams& p) const {
        std::vector<cplx> d = base_;
        for (std::size_t j = 0; j < n_steps_; ++j) {
            for (std::size_t i = 0; i < rank_; ++i) {
                const double dl = noise.at(j, i);
                const cplx* row = table_.data() + (j * rank_ + i) * (M_ + 1);
                for (std::size_t m = 0; m <= M_; ++m) d[m] += dl * row[m];
            }
        }
        const double T = p.horizon_T;
        const double dec = p.decay();
        double var = 0.0;
        for (std::size_t m = 0; m < M_; ++m) {
            var += std::abs(d[m + 1] - d[m]) * std::exp(dec * 0.5 * (ys_[m] + ys_[m + 1]));
        }
        const double jump = std::abs(d[M_] * std::exp(dec * T) - d[0]);
        return T * (jump * jump + var * var) / (pi * pi * -std::expm1(-2.0 * p.lambda * T));
    }

private:
    std::size_t M_;
    std::size_t n_steps_;
    std::size_t rank_;
    std::vector<double> ys_;
    std::vector<cplx> base_;
    std::vector<cplx> table_;
};

inline double sup_sq_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) m = std::max(m, std::norm(a[q] - b[q]));
    return m;
}

}  // namespace detail

/// E[sup_{x in [0, T-t]} |f_k(t,x) - f(t,x)|^2] per k under common random numbers,
/// with the sampled bound A(t)/k.
///
/// A(t) = 3 (1 + 1/alpha) (E C_1(f_Pi(t)) + C_2 (||Pi f0||^2 + int_0^t sum_i w_i^2 ||Pi l_i||^2 ds
///        + (int_0^t |a| ||Pi beta|| ds)^2)).
inline ConvergenceReport convergence_experiment(const ModelSpec& spec, const LevyDriver& driver,
                                                const ConvergenceSettings& cfg) {
    spec.validate(driver);
    HJMM_REQUIRE(cfg.n_paths >= 1, InvalidArgument, "n_paths must be >= 1");
    HJMM_REQUIRE(!cfg.k_list.empty(), InvalidArgument, "k_list must not be empty");
    const BasisParams& p = spec.params;
    const TimeGrid grid = TimeGrid::uniform(cfg.t_eval, cfg.dt);
    HJMM_REQUIRE(cfg.t_eval <= p.horizon_T, InvalidArgument, "t_eval must not exceed T");
    const auto xs = sup_grid(p.horizon_T, cfg.t_eval, cfg.sup_points);
    const PointOracle oracle(spec, driver, grid, xs);
    const detail::PiDerivativeTable dtab(spec, driver, grid, cfg.bound_points);

    struct Level {
        BasisParams p;
        ProjectedModel pm;
        ShiftCache shift;
        BasisTable table;
    };
    std::vector<Level> levels;
    for (int k : cfg.k_list) {
        const BasisParams pk = p.with_k(k);
        levels.push_back(Level{pk, project_model(spec, driver, k), ShiftCache(pk, grid.dt), BasisTable(pk, xs)});
    }
    std::vector<double> sum(levels.size()), sum_sq(levels.size());
    double c1_sum = 0.0;
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        const NoiseRecord noise = driver.draw(cfg.path_offset + path, grid.n_steps, grid.dt);
        const auto truth = oracle.values(noise);
        c1_sum += dtab.c1(noise, p);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const Level& lv = levels[l];
            CoeffState x = lv.pm.f0;
            for (std::size_t j = 0; j < grid.n_steps; ++j) {
                x += detail::model_increment(lv.pm, spec, noise, j, grid.time(j), grid.dt, lv.p);
                lv.shift.apply(x);
            }
            const double e = detail::sup_sq_diff(lv.table.values(x), truth);
            sum[l] += e;
            sum_sq[l] += e * e;
        }
    }
    const double n = static_cast<double>(cfg.n_paths);
    ConvergenceReport rep;
    RateConstant& rc = rep.rate;
    rc.mean_C1 = c1_sum / n;
    rc.norm_pi_f0_sq = std::pow(norm_alpha(project_pi(spec.f0, p), p.alpha), 2);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        for (std::size_t i = 0; i < driver.rank(); ++i) {
            rc.trace_integral += grid.dt * std::pow(spec.weight(i, s), 2) *
                                 std::pow(norm_alpha(project_pi(driver.loadings[i], p), p.alpha), 2);
        }
        if (spec.has_drift()) {
            rc.drift_integral +=
                grid.dt * std::abs(spec.drift_scale(s)) * norm_alpha(project_pi(*spec.beta_shape, p), p.alpha);
        }
    }
    const double c2 = compute_C2(p);
    rc.A = 3.0 * (1.0 + 1.0 / p.alpha) *
           (rc.mean_C1 + c2 * (rc.norm_pi_f0_sq + rc.trace_integral + rc.drift_integral * rc.drift_integral));
    for (std::size_t l = 0; l < levels.size(); ++l) {
        ConvergenceRow row;
        row.k = cfg.k_list[l];
        row.mc_error = sum[l] / n;
        const double var = n > 1 ? std::max(0.0, (sum_sq[l] - n * row.mc_error * row.mc_error) / (n - 1.0)) : 0.0;
        row.stderr_ = std::sqrt(var / n);
        row.bound = rc.A / static_cast<double>(std::max(row.k, 1));
        rep.rows.push_back(row);
    }
    return rep;
}

struct MartingaleReport {
    double tau = 0.0;
    std::vector<double> step_mean;    ///< mean price increment per step
    std::vector<double> step_stderr;
    double total_mean = 0.0;          ///< mean of F(t_end) - F(0)
    double total_stderr = 0.0;
};

/// Fixed-maturity prices P(t_j) = f_k(t_j, tau - t_j) along simulated paths; reports
/// Monte-Carlo means and standard errors of their increments.
inline MartingaleReport martingale_check(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& grid,
                                         int k, double tau, std::size_t n_paths, std::uint64_t path_offset = 0) {
    spec.validate(driver);
    HJMM_REQUIRE(tau >= grid.horizon() && tau <= spec.params.horizon_T, InvalidArgument,
                 "maturity must lie in [t_end, T]");
    HJMM_REQUIRE(n_paths >= 2, InvalidArgument, "need at least two paths");
    const BasisParams p = spec.params.with_k(k);
    const ProjectedModel pm = project_model(spec, driver, k);
    const ShiftCache shift(p, grid.dt);
    const std::size_t width = static_cast<std::size_t>(2 * k + 1);
    std::vector<cplx> gtab((grid.n_steps + 1) * width);
    for (std::size_t j = 0; j <= grid.n_steps; ++j) {
        for (int n = -k; n <= k; ++n) {
            gtab[j * width + static_cast<std::size_t>(n + k)] = eval_g_n(p, n, tau - grid.time(j));
        }
    }
    auto price = [&](const CoeffState& x, std::size_t j) {
        cplx acc = x.c_star;
        for (std::size_t q = 0; q < width; ++q) acc += x.c[q] * gtab[j * width + q];
        return acc.real();
    };
    std::vector<double> s1(grid.n_steps), s2(grid.n_steps);
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t path = 0; path < n_paths; ++path) {
        const NoiseRecord noise = driver.draw(path_offset + path, grid.n_steps, grid.dt);
        CoeffState x = pm.f0;
        const double p0 = price(x, 0);
        double prev = p0;
        for (std::size_t j = 0; j < grid.n_steps; ++j) {
            x += detail::model_increment(pm, spec, noise, j, grid.time(j), grid.dt, p);
            shift.apply(x);
            const double cur = price(x, j + 1);
            s1[j] += cur - prev;
            s2[j] += (cur - prev) * (cur - prev);
            prev = cur;
        }
        t1 += prev - p0;
        t2 += (prev - p0) * (prev - p0);
    }
    const double n = static_cast<double>(n_paths);
    auto se = [n](double a, double b) { return std::sqrt(std::max(0.0, (b - a * a / n) / (n - 1.0)) / n); };
    MartingaleReport rep;
    rep.tau = tau;
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        rep.step_mean.push_back(s1[j] / n);
        rep.step_stderr.push_back(se(s1[j], s2[j]));
    }
    rep.total_mean = t1 / n;
    rep.total_stderr = se(t1, t2);
    return rep;
}

}  // namespace hjmm
