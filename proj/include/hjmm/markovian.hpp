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

// State-dependent coefficients b(t, f), psi(t, f), their projections, the
// Picard operator V and the Markovian finite-rank simulation.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hjmm/dynamics.hpp"

namespace hjmm {

/// b(t, f) and the d columns of psi(t, f) with their declared Lipschitz/growth constants.
///
/// Fields must be pure functions of (t, f). A null `b` or `psi` means zero.
struct CoefficientField {
    std::string name;
    std::size_t rank = 0;
    std::function<Curve(double, const Curve&)> b;
    std::function<std::vector<Curve>(double, const Curve&)> psi;
    double lipschitz_b = 0.0;
    double lipschitz_psi = 0.0;

    void validate() const {
        HJMM_REQUIRE(lipschitz_b >= 0.0 && lipschitz_psi >= 0.0, InvalidArgument,
                     "declared constants must be nonnegative");
        HJMM_REQUIRE(!psi || rank >= 1, InvalidArgument, "volatility field needs a positive rank");
    }
};

/// f on [0, a] continued as the constant f(a): derivative samples beyond a are zeroed,
/// expressed on the grid `like` (same step).
inline Curve restrict_to(const Curve& f, double a, const Curve& like) {
    HJMM_REQUIRE(same_step(f, like), GridMismatch, "restriction needs a common step");
    Curve out;
    out.value_at_zero = f.value_at_zero;
    out.grid_step = like.grid_step;
    out.deriv_samples.assign(like.deriv_samples.size(), cplx{});
    const double cutoff = a * (1.0 + 1e-12) + 1e-14;
    for (std::size_t j = 0; j < out.deriv_samples.size(); ++j) {
        const double x = out.x(j);
        if (x > cutoff) break;
        if (!f.localized && j > f.intervals()) break;
        out.deriv_samples[j] = f.localized ? derivative_at(f, x) : f.deriv_samples[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Registry.

namespace fields {

/// b(t, f) = kappa (theta - R_{T-t} f), where R_a keeps f on [0, a] and freezes it beyond.
/// Lipschitz kappa; growth kappa max(1, ||theta||): declared C_b = kappa max(1, ||theta||).
inline CoefficientField mean_revert(double kappa, const Curve& theta, const BasisParams& p) {
    HJMM_REQUIRE(kappa > 0.0, InvalidArgument, "mean_revert needs kappa > 0");
    CoefficientField cf;
    cf.name = "mean_revert";
    const double T = p.horizon_T;
    cf.b = [kappa, theta, T](double t, const Curve& f) {
        Curve out = restrict_to(f, std::max(0.0, T - t), theta);
        out.value_at_zero = kappa * (theta.value_at_zero - out.value_at_zero);
        for (std::size_t j = 0; j < out.deriv_samples.size(); ++j) {
            out.deriv_samples[j] = kappa * (theta.deriv_samples[j] - out.deriv_samples[j]);
        }
        return out;
    };
    cf.lipschitz_b = kappa * std::max(1.0, norm_alpha(theta, p.alpha));
    return cf;
}

/// psi_i(t, f) = sigma0 f(0) loading_i; C_psi = |sigma0| sqrt(sum ||loading_i||^2).
inline CoefficientField proportional_vol(double sigma0, const LevyDriver& driver, const BasisParams& p) {
    CoefficientField cf;
    cf.name = "proportional_vol";
    cf.rank = driver.rank();
    auto loadings = driver.loadings;
    cf.psi = [sigma0, loadings](double, const Curve& f) {
        std::vector<Curve> cols;
        cols.reserve(loadings.size());
        for (const auto& l : loadings) cols.push_back((sigma0 * f.value_at_zero) * l);
        return cols;
    };
    cf.lipschitz_psi = std::abs(sigma0) * std::sqrt(driver.trace_Q(p.alpha));
    return cf;
}

/// The model's deterministic drift beta(t), independent of f.
inline CoefficientField constant_drift(const ModelSpec& spec, const TimeGrid& sample_times) {
    CoefficientField cf;
    cf.name = "constant";
    if (!spec.has_drift()) return cf;
    cf.b = [spec](double t, const Curve&) { return spec.beta(t); };
    double sup = 0.0;
    const double nb = norm_alpha(*spec.beta_shape, spec.params.alpha);
    for (std::size_t j = 0; j <= sample_times.n_steps; ++j) {
        sup = std::max(sup, std::abs(spec.drift_scale(sample_times.time(j))) * nb);
    }
    cf.lipschitz_b = sup;
    return cf;
}

/// The model's deterministic columns w_i(t) loading_i, independent of f.
inline CoefficientField constant_vol(const ModelSpec& spec, const LevyDriver& driver, const TimeGrid& sample_times) {
    CoefficientField cf;
    cf.name = "constant";
    cf.rank = driver.rank();
    cf.psi = [spec, driver](double t, const Curve&) {
        std::vector<Curve> cols;
        for (std::size_t i = 0; i < driver.rank(); ++i) cols.push_back(spec.psi_column(driver, i, t));
        return cols;
    };
    std::vector<double> sq;
    for (const auto& l : driver.loadings) sq.push_back(std::pow(norm_alpha(l, spec.params.alpha), 2));
    double sup = 0.0;
    for (std::size_t j = 0; j <= sample_times.n_steps; ++j) {
        double hs = 0.0;
        for (std::size_t i = 0; i < sq.size(); ++i) hs += std::pow(spec.weight(i, sample_times.time(j)), 2) * sq[i];
        sup = std::max(sup, std::sqrt(hs));
    }
    cf.lipschitz_psi = sup;
    return cf;
}

/// Drift part of `a` joined with the volatility part of `v`.
inline CoefficientField combine(const CoefficientField& a, const CoefficientField& v) {
    CoefficientField cf;
    cf.name = a.name + "+" + v.name;
    cf.b = a.b;
    cf.lipschitz_b = a.lipschitz_b;
    cf.psi = v.psi;
    cf.rank = v.rank;
    cf.lipschitz_psi = v.lipschitz_psi;
    return cf;
}

}  // namespace fields

/// A parsed registry entry such as "mean_revert(1.5,bump)": name plus raw arguments.
struct FieldSpec {
    std::string name;
    std::vector<std::string> args;
};

inline FieldSpec parse_field_spec(const std::string& text) {
    FieldSpec fs;
    std::string s;
    for (char ch : text) {
        if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    }
    const auto open = s.find('(');
    if (open == std::string::npos) {
        fs.name = s;
    } else {
        HJMM_REQUIRE(s.back() == ')', InvalidArgument, "unbalanced parentheses in field '" + text + "'");
        fs.name = s.substr(0, open);
        const std::string inner = s.substr(open + 1, s.size() - open - 2);
        std::string cur;
        int depth = 0;
        for (char ch : inner) {
            if (ch == '(') ++depth;
            if (ch == ')') --depth;
            if (ch == ',' && depth == 0) {
                fs.args.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        if (!cur.empty() || !fs.args.empty()) fs.args.push_back(cur);
    }
    HJMM_REQUIRE(!fs.name.empty(), InvalidArgument, "empty field name");
    return fs;
}

namespace detail {

inline double parse_number(const std::string& s, const std::string& ctx) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("expected a number in '" + ctx + "', got '" + s + "'");
    }
}

}  // namespace detail

/// Resolves curve arguments (builtin names or files) for registry entries.
using CurveResolver = std::function<Curve(const std::string&)>;

/// Drift registry: "zero", "constant", "mean_revert(kappa,theta)".
inline CoefficientField make_drift_field(const std::string& text, const ModelSpec& spec, const TimeGrid& times,
                                         const CurveResolver& resolve) {
    const FieldSpec fs = parse_field_spec(text);
    if (fs.name == "zero") {
        HJMM_REQUIRE(fs.args.empty(), InvalidArgument, "zero takes no arguments");
        CoefficientField cf;
        cf.name = "zero";
        return cf;
    }
    if (fs.name == "constant") {
        HJMM_REQUIRE(fs.args.empty(), InvalidArgument, "constant takes no arguments");
        return fields::constant_drift(spec, times);
    }
    if (fs.name == "mean_revert") {
        HJMM_REQUIRE(fs.args.size() == 2, InvalidArgument, "mean_revert(kappa,theta) takes two arguments");
        const double kappa = detail::parse_number(fs.args[0], text);
        const Curve theta = resolve(fs.args[1]);
        HJMM_REQUIRE(same_step(theta, spec.f0) && theta.intervals() >= spec.f0.intervals(), GridMismatch,
                     "mean_revert target must share the f0 grid");
        return fields::mean_revert(kappa, theta, spec.params);
    }
    throw InvalidArgument("unknown drift field '" + fs.name + "'");
}

/// Volatility registry: "constant", "proportional_vol(sigma0)".
inline CoefficientField make_vol_field(const std::string& text, const ModelSpec& spec, const LevyDriver& driver,
                                       const TimeGrid& times) {
    const FieldSpec fs = parse_field_spec(text);
    if (fs.name == "constant") {
        HJMM_REQUIRE(fs.args.empty(), InvalidArgument, "constant takes no arguments");
        return fields::constant_vol(spec, driver, times);
    }
    if (fs.name == "proportional_vol") {
        HJMM_REQUIRE(fs.args.size() == 1, InvalidArgument, "proportional_vol(sigma0) takes one argument");
        return fields::proportional_vol(detail::parse_number(fs.args[0], text), driver, spec.params);
    }
    throw InvalidArgument("unknown volatility field '" + fs.name + "'");
}

// ---------------------------------------------------------------------------
// Projection of fields.

/// Coefficient-level view of b_k = Lambda_k b and psi_k = Lambda_k psi.
struct ProjectedField {
    CoefficientField base;
    BasisParams params;

    std::optional<CoeffState> b_bar(double t, const Curve& f) const {
        if (!base.b) return std::nullopt;
        return lambda_k(base.b(t, f), params);
    }

    std::vector<CoeffState> psi_bar(double t, const Curve& f) const {
        std::vector<CoeffState> out;
        if (!base.psi) return out;
        for (const auto& col : base.psi(t, f)) out.push_back(lambda_k(col, params));
        return out;
    }

    /// e^{lambda T} sqrt(1 / (1 - e^{-2 lambda T})): ||Pi_k|| ||Pi|| bound.
    double projection_bound() const {
        return std::exp(params.lambda * params.horizon_T) * std::sqrt(params.frame_upper());
    }

    /// The projected field as curve-valued maps.
    CoefficientField as_field(std::size_t intervals = default_period_intervals) const {
        CoefficientField cf;
        cf.name = base.name + "_k";
        cf.rank = base.rank;
        const ProjectedField self = *this;
        if (base.b) {
            cf.b = [self, intervals](double t, const Curve& f) { return to_curve(*self.b_bar(t, f), intervals); };
        }
        if (base.psi) {
            cf.psi = [self, intervals](double t, const Curve& f) {
                std::vector<Curve> out;
                for (const auto& s : self.psi_bar(t, f)) out.push_back(to_curve(s, intervals));
                return out;
            };
        }
        cf.lipschitz_b = base.lipschitz_b * projection_bound();
        cf.lipschitz_psi = base.lipschitz_psi * projection_bound();
        return cf;
    }
};

inline ProjectedField projected_coefficients(const CoefficientField& cf, int k, const BasisParams& p) {
    return ProjectedField{cf, p.with_k(k)};
}

// ---------------------------------------------------------------------------
// Simulation.

enum class MarkovScheme {
    explicit_euler,     ///< x <- x + dt A x + dX
    exponential_euler,  ///< x <- U_dt (x + dX)
};

namespace detail {

inline std::size_t period_intervals_of(const ModelSpec& spec) {
    const auto n = grid_index(spec.params.horizon_T, spec.f0.grid_step);
    HJMM_REQUIRE(n.has_value(), GridMismatch, "T must be a grid multiple of the f0 step");
    return *n;
}

inline void check_noise(const NoiseRecord& noise, const TimeGrid& grid, std::size_t rank) {
    HJMM_REQUIRE(noise.n_steps >= grid.n_steps && (rank == 0 || noise.rank == rank), InvalidArgument,
                 "noise record does not match the grid");
}

inline std::span<const double> noise_row(const NoiseRecord& noise, std::size_t step) {
    return {noise.increments.data() + step * noise.rank, noise.rank};
}

}  // namespace detail

/// Markovian f_k on the 2k+2 coefficient system; b_k, psi_k are evaluated on the
/// pre-step state (left limit).
inline SimPath simulate_markovian_fk(const CoefficientField& cf, const ModelSpec& spec, const TimeGrid& grid, int k,
                                     const NoiseRecord& noise,
                                     MarkovScheme scheme = MarkovScheme::exponential_euler) {
    cf.validate();
    const BasisParams p = spec.params.with_k(k);
    if (scheme == MarkovScheme::explicit_euler) check_euler_stability(p, grid.dt);
    detail::check_noise(noise, grid, cf.psi ? cf.rank : 0);
    const ProjectedField pf = projected_coefficients(cf, k, spec.params);
    const std::size_t N = detail::period_intervals_of(spec);
    const ShiftCache shift(p, grid.dt);
    SimPath path;
    path.times = grid.times();
    path.noise_record = noise;
    CoeffState x = lambda_k(spec.f0, p);
    path.states.push_back(x);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        const Curve f = to_curve(x, N);
        const auto b = pf.b_bar(s, f);
        const auto psi = pf.psi_bar(s, f);
        const CoeffState dx = assemble_increment(b, psi, detail::noise_row(noise, j), grid.dt, p);
        if (scheme == MarkovScheme::explicit_euler) {
            x = euler_step(x, dx, grid.dt);
        } else {
            x += dx;
            shift.apply(x);
        }
        path.states.push_back(x);
    }
    return path;
}

/// V(h)(t_n) = U_{t_n} f0 + sum_{j<n} U_{t_n - t_j}(b(t_j, h(t_j)) dt + psi(t_j, h(t_j)) dL_j),
/// evaluated recursively on the same grid and noise record.
inline std::vector<Curve> picard_operator_V(const CoefficientField& cf, const ModelSpec& spec, const TimeGrid& grid,
                                            const NoiseRecord& noise, const std::vector<Curve>& h) {
    HJMM_REQUIRE(h.size() >= grid.n_steps, InvalidArgument, "process shorter than the grid");
    detail::check_noise(noise, grid, cf.psi ? cf.rank : 0);
    std::vector<Curve> out;
    out.reserve(grid.n_steps + 1);
    out.push_back(spec.f0);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        Curve v = out.back();
        if (cf.b) detail::add_restricted(v, cf.b(s, h[j]), grid.dt);
        if (cf.psi) {
            const auto cols = cf.psi(s, h[j]);
            for (std::size_t i = 0; i < cols.size(); ++i) {
                const double dl = noise.at(j, i);
                if (dl != 0.0) detail::add_restricted(v, cols[i], dl);
            }
        }
        out.push_back(shift_curve(v, grid.dt));
    }
    return out;
}

/// Fine-grid mild Euler solution f(t_{j+1}) = U_dt(f + b(t_j, f) dt + psi(t_j, f) dL_j):
/// the fixed point of picard_operator_V on the same grid.
inline SimPath markovian_oracle(const CoefficientField& cf, const ModelSpec& spec, const TimeGrid& grid,
                                const NoiseRecord& noise) {
    detail::check_noise(noise, grid, cf.psi ? cf.rank : 0);
    SimPath path;
    path.times = grid.times();
    path.noise_record = noise;
    path.curves.push_back(spec.f0);
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        const double s = grid.time(j);
        const Curve& cur = path.curves.back();
        Curve v = cur;
        if (cf.b) detail::add_restricted(v, cf.b(s, cur), grid.dt);
        if (cf.psi) {
            const auto cols = cf.psi(s, cur);
            for (std::size_t i = 0; i < cols.size(); ++i) {
                const double dl = noise.at(j, i);
                if (dl != 0.0) detail::add_restricted(v, cols[i], dl);
            }
        }
        path.curves.push_back(shift_curve(v, grid.dt));
    }
    return path;
}

/// max over grid times of sup_{x in [0, T - t]} |a(t, x) - b(t, x)| on the shared grid.
inline double path_sup_distance(const std::vector<Curve>& a, const std::vector<Curve>& b, const TimeGrid& grid,
                                double T) {
    double worst = 0.0;
    for (std::size_t j = 0; j <= grid.n_steps && j < a.size() && j < b.size(); ++j) {
        const CurveEvaluator ea(a[j]);
        const CurveEvaluator eb(b[j]);
        const auto J = static_cast<std::size_t>(std::floor((T - grid.time(j)) / a[j].grid_step + 1e-9));
        const auto& va = ea.grid_values();
        const auto& vb = eb.grid_values();
        for (std::size_t q = 0; q <= J && q < va.size() && q < vb.size(); ++q) {
            worst = std::max(worst, std::abs(va[q] - vb[q]));
        }
    }
    return worst;
}

struct PicardLog {
    std::vector<double> residuals;  ///< sup distance between successive iterates
    std::vector<Curve> iterate;     ///< last iterate
};

/// Iterates V from the constant process h = f0 and logs successive distances.
inline PicardLog picard_iterate(const CoefficientField& cf, const ModelSpec& spec, const TimeGrid& grid,
                                const NoiseRecord& noise, int iterations) {
    HJMM_REQUIRE(iterations >= 1, InvalidArgument, "need at least one Picard iteration");
    PicardLog log;
    std::vector<Curve> h(grid.n_steps + 1, spec.f0);
    for (int m = 0; m < iterations; ++m) {
        auto next = picard_operator_V(cf, spec, grid, noise, h);
        log.residuals.push_back(path_sup_distance(next, h, grid, spec.params.horizon_T));
        h = std::move(next);
    }
    log.iterate = std::move(h);
    return log;
}

/// sup_{t_n, x} |V(h)(t_n, x) - h(t_n, x)| at zero noise, with V integrated on a
/// substep dt / substeps and h continued between grid times by transport,
/// h(t_j + r) = U_r h(t_j).
inline double picard_residual_refined(const CoefficientField& cf, const ModelSpec& spec, const TimeGrid& grid,
                                      const std::vector<Curve>& h, std::size_t substeps) {
    HJMM_REQUIRE(substeps >= 1 && h.size() >= grid.n_steps + 1, InvalidArgument, "bad refinement");
    const double delta = grid.dt / static_cast<double>(substeps);
    HJMM_REQUIRE(grid_index(delta, spec.f0.grid_step).has_value(), GridMismatch,
                 "substep must be a multiple of the curve grid step");
    std::vector<Curve> v{spec.f0};
    Curve cur = spec.f0;
    for (std::size_t j = 0; j < grid.n_steps; ++j) {
        for (std::size_t l = 0; l < substeps; ++l) {
            const double r = delta * static_cast<double>(l);
            const double u = grid.time(j) + r;
            if (cf.b) {
                const Curve hu = l == 0 ? h[j] : shift_curve(h[j], r);
                detail::add_restricted(cur, cf.b(u, hu), delta);
            }
            cur = shift_curve(cur, delta);
        }
        v.push_back(cur);
    }
    return path_sup_distance(v, h, grid, spec.params.horizon_T);
}

// ---------------------------------------------------------------------------
// Contract audits.

struct AuditReport {
    std::size_t pairs = 0;
    double worst_lipschitz_b = 0.0;    ///< max ||b(f)-b(g)|| / ||f-g||
    double worst_lipschitz_psi = 0.0;  ///< max HS distance / ||f-g||
    double worst_growth_b = 0.0;       ///< max ||b(f)|| / (1 + ||f||)
    double worst_growth_psi = 0.0;
    double structure_max_diff = 0.0;   ///< largest output change from perturbations beyond T - t
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

namespace detail {

// Random smooth real curve on f0's grid; localized when `localized` is set.
inline Curve random_curve(std::mt19937_64& rng, const ModelSpec& spec, bool localized) {
    std::normal_distribution<double> nd;
    const BasisParams& p = spec.params;
    if (localized) {
        auto s = CoeffState::zero(p.with_k(8));
        s.c_star = nd(rng);
        for (int n = 0; n <= 8; ++n) {
            const cplx v = cplx(nd(rng), n == 0 ? 0.0 : nd(rng)) / (1.0 + n);
            s.at(n) = v;
            s.at(-n) = std::conj(v);
        }
        return to_curve(s, period_intervals_of(spec));
    }
    double a[6], ph[6];
    for (int m = 0; m < 6; ++m) {
        a[m] = nd(rng) / (1.0 + m);
        ph[m] = 2.0 * pi * std::uniform_real_distribution<double>()(rng);
    }
    Curve c = spec.f0;
    c.value_at_zero = nd(rng);
    for (std::size_t j = 0; j < c.deriv_samples.size(); ++j) {
        const double x = c.x(j);
        double v = 0.0;
        for (int m = 0; m < 6; ++m) v += a[m] * std::cos((m + 1) * 2.0 * x + ph[m]);
        c.deriv_samples[j] = v * std::exp(-0.5 * p.alpha * x);
    }
    return c;
}

inline double curve_max_diff(const Curve& a, const Curve& b) {
    double d = std::abs(a.value_at_zero - b.value_at_zero);
    const std::size_t n = std::min(a.deriv_samples.size(), b.deriv_samples.size());
    for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(a.deriv_samples[j] - b.deriv_samples[j]));
    if (a.deriv_samples.size() != b.deriv_samples.size()) d = std::max(d, 1.0);
    return d;
}

}  // namespace detail

/// Samples `pairs` random (f, g, t) and checks the declared Lipschitz and growth
/// constants and the structure condition. With `throw_on_violation` a violation
/// raises ContractViolation carrying the diagnostics.
inline AuditReport audit_contracts(const CoefficientField& cf, const ModelSpec& spec, std::size_t pairs,
                                   std::uint64_t seed, bool throw_on_violation = true) {
    cf.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud;
    const BasisParams& p = spec.params;
    const double T = p.horizon_T;
    const double rel = 1e-9;
    AuditReport rep;
    rep.pairs = pairs;
    auto hs_dist = [&](const std::vector<Curve>& a, const std::vector<Curve>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Curve d = a[i] - b[i];
            s += std::pow(norm_alpha(d, p.alpha), 2);
        }
        return std::sqrt(s);
    };
    for (std::size_t q = 0; q < pairs; ++q) {
        const bool loc = (q % 2) == 1;
        const Curve f = detail::random_curve(rng, spec, loc);
        Curve g = detail::random_curve(rng, spec, loc);
        if (q % 3 == 0) g = f + 1e-3 * g;
        const double t = T * std::floor(ud(rng) * 64.0) / 64.0;
        const Curve diff = f - g;
        const double dist = norm_alpha(diff, p.alpha);
        const double nf = norm_alpha(f, p.alpha);
        if (cf.b) {
            const Curve bf = cf.b(t, f);
            const double db = norm_alpha(bf - cf.b(t, g), p.alpha);
            if (dist > 0.0) rep.worst_lipschitz_b = std::max(rep.worst_lipschitz_b, db / dist);
            rep.worst_growth_b = std::max(rep.worst_growth_b, norm_alpha(bf, p.alpha) / (1.0 + nf));
        }
        if (cf.psi) {
            const auto pf = cf.psi(t, f);
            const auto pg = cf.psi(t, g);
            std::vector<Curve> zero;
            for (const auto& c : pf) zero.push_back(0.0 * c);
            if (dist > 0.0) rep.worst_lipschitz_psi = std::max(rep.worst_lipschitz_psi, hs_dist(pf, pg) / dist);
            rep.worst_growth_psi = std::max(rep.worst_growth_psi, hs_dist(pf, zero) / (1.0 + nf));
        }
        // Structure: alter a plain copy of f strictly beyond T - t.
        Curve plain = loc ? materialize(f, spec.f0.x_max()) : f;
        Curve pert = plain;
        for (std::size_t j = 0; j < pert.deriv_samples.size(); ++j) {
            if (pert.x(j) > (T - t) * (1.0 + 1e-12) + 1e-14) pert.deriv_samples[j] += std::normal_distribution<double>()(rng);
        }
        if (cf.b) rep.structure_max_diff = std::max(rep.structure_max_diff,
                                                     detail::curve_max_diff(cf.b(t, plain), cf.b(t, pert)));
        if (cf.psi) {
            const auto a = cf.psi(t, plain);
            const auto b = cf.psi(t, pert);
            for (std::size_t i = 0; i < a.size(); ++i) {
                rep.structure_max_diff = std::max(rep.structure_max_diff, detail::curve_max_diff(a[i], b[i]));
            }
        }
    }
    auto check = [&](double observed, double declared, const char* what) {
        if (observed > declared * (1.0 + rel) + 1e-12) {
            std::ostringstream os;
            os << what << ": observed " << observed << " exceeds declared " << declared;
            rep.violations.push_back(os.str());
        }
    };
    check(rep.worst_lipschitz_b, cf.lipschitz_b, "Lipschitz(b)");
    check(rep.worst_growth_b, cf.lipschitz_b, "growth(b)");
    check(rep.worst_lipschitz_psi, cf.lipschitz_psi, "Lipschitz(psi)");
    check(rep.worst_growth_psi, cf.lipschitz_psi, "growth(psi)");
    if (rep.structure_max_diff != 0.0) {
        std::ostringstream os;
        os << "structure: output changed by " << rep.structure_max_diff << " under perturbation beyond T - t";
        rep.violations.push_back(os.str());
    }
    if (throw_on_violation && !rep.ok()) {
        std::string msg = "contract audit of field '" + cf.name + "' failed:";
        for (const auto& v : rep.violations) msg += " [" + v + "]";
        throw ContractViolation(msg);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Convergence experiment.

struct MarkovSettings {
    double dt = 1.0 / 128.0;
    double t_end = 1.0;
    std::vector<int> k_list{4, 8, 16, 32, 64};
    std::size_t n_paths = 200;
    std::uint64_t path_offset = 0;
    MarkovScheme scheme = MarkovScheme::exponential_euler;
};

/// E[sup_{t in grid, x in [0, T - t]} |f_k(t,x) - f(t,x)|^2] per k, against the
/// fine-grid mild Euler oracle on the same noise. Rows carry no bound (bound = 0).
inline std::vector<ConvergenceRow> markovian_convergence_experiment(const CoefficientField& cf, const ModelSpec& spec,
                                                                    const LevyDriver& driver,
                                                                    const MarkovSettings& cfg) {
    cf.validate();
    spec.validate(driver);
    HJMM_REQUIRE(cfg.n_paths >= 1 && !cfg.k_list.empty(), InvalidArgument, "bad Markovian settings");
    const BasisParams& p = spec.params;
    HJMM_REQUIRE(cfg.t_end <= p.horizon_T, InvalidArgument, "t_end must not exceed T");
    const TimeGrid grid = TimeGrid::uniform(cfg.t_end, cfg.dt);
    const std::size_t N = detail::period_intervals_of(spec);
    const double h = spec.f0.grid_step;
    std::vector<double> sum(cfg.k_list.size()), sum_sq(cfg.k_list.size());
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        const NoiseRecord noise = driver.draw(cfg.path_offset + path, grid.n_steps, grid.dt);
        const SimPath truth = markovian_oracle(cf, spec, grid, noise);
        std::vector<std::vector<cplx>> truth_vals;
        for (const auto& c : truth.curves) truth_vals.push_back(CurveEvaluator(c).grid_values());
        for (std::size_t l = 0; l < cfg.k_list.size(); ++l) {
            const SimPath approx = simulate_markovian_fk(cf, spec, grid, cfg.k_list[l], noise, cfg.scheme);
            double worst = 0.0;
            for (std::size_t j = 0; j <= grid.n_steps; ++j) {
                const auto vals = reconstruct_grid(approx.states[j], N);
                const auto J = static_cast<std::size_t>(std::floor((p.horizon_T - grid.time(j)) / h + 1e-9));
                for (std::size_t q = 0; q <= J; ++q) worst = std::max(worst, std::norm(vals[q] - truth_vals[j][q]));
            }
            sum[l] += worst;
            sum_sq[l] += worst * worst;
        }
    }
    const double n = static_cast<double>(cfg.n_paths);
    std::vector<ConvergenceRow> rows;
    for (std::size_t l = 0; l < cfg.k_list.size(); ++l) {
        ConvergenceRow row;
        row.k = cfg.k_list[l];
        row.mc_error = sum[l] / n;
        const double var = n > 1 ? std::max(0.0, (sum_sq[l] - n * row.mc_error * row.mc_error) / (n - 1.0)) : 0.0;
        row.stderr_ = std::sqrt(var / n);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace hjmm
