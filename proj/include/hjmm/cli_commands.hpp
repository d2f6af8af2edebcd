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

// Subcommand bodies for the command-line tool. Each returns a process exit code:
// 0 success, 1 invariant failure, 2 config error, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hjmm/hjmm.hpp"

namespace hjmm::cli {

enum ExitCode : int { ok = 0, invariant_failure = 1, config_error = 2, numerical_failure = 3 };

struct CheckRow {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os.good()) throw Error("cannot write " + p.string());
    return os;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// basis-check

/// Biorthogonality, frame bounds, commutator identity and operator norms at the configured k.
inline std::vector<CheckRow> basis_invariants(const BasisParams& params, std::uint64_t seed) {
    std::vector<CheckRow> rows;
    const BasisParams p = params;
    const int k = p.k;

    // <g_m, g_n^*> over |m|, |n| <= min(k, 8)
    {
        const int K = std::min(k, 8);
        double worst = 0.0;
        std::vector<Curve> duals;
        for (int n = -K; n <= K; ++n) duals.push_back(dual_curve(p, n));
        for (int m = -K; m <= K; ++m) {
            const Curve gm = basis_curve(p, m);
            for (int n = -K; n <= K; ++n) {
                const cplx v = inner_product_alpha(gm, duals[static_cast<std::size_t>(n + K)], p.alpha);
                worst = std::max(worst, std::abs(v - (m == n ? 1.0 : 0.0)));
            }
            worst = std::max(worst, std::abs(inner_product_alpha(g_star_curve(p), duals[static_cast<std::size_t>(m + K)], p.alpha)));
        }
        rows.push_back({"biorthogonality_max_dev", worst, 1e-6, worst <= 1e-6});
    }
    // frame inequality on 100 random states
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        const double lo = p.frame_lower(), hi = p.frame_upper();
        double worst_lo = std::numeric_limits<double>::infinity(), worst_hi = 0.0;
        for (int r = 0; r < 100; ++r) {
            auto s = CoeffState::zero(p);
            s.c_star = cplx(nd(rng), nd(rng));
            for (auto& v : s.c) v = cplx(nd(rng), nd(rng));
            const double e = coefficient_energy(s);
            const double nrm = inner_product_alpha(to_curve(s), to_curve(s), p.alpha).real();
            worst_lo = std::min(worst_lo, nrm / (lo * e));
            worst_hi = std::max(worst_hi, nrm / (hi * e));
        }
        rows.push_back({"frame_lower_ratio", worst_lo, 0.98, worst_lo >= 0.98});
        rows.push_back({"frame_upper_ratio", worst_hi, 1.02, worst_hi <= 1.02});
    }
    // (Pi_k U_t - U_t Pi_k) g_n - 1_{|n|>k} g_n(t) g_*
    {
        const int K = 2 * k + 8;
        const BasisParams pK = p.with_k(K);
        double worst = 0.0;
        for (int n = -K; n <= K; ++n) {
            for (int i = 0; i < 32; ++i) {
                const double t = p.horizon_T * i / 31.0;
                auto d = commutator_on_state(CoeffState::unit(pK, n), k, t);
                if (std::abs(n) > k) d.c_star -= eval_g_n(p, n, t);
                worst = std::max(worst, state_norm(d));
            }
        }
        rows.push_back({"commutator_identity_max", worst, 1e-10, worst <= 1e-10});
    }
    // operator norms
    {
        const double target = std::sqrt(p.frame_upper());
        const double est = estimate_pi_norm(p, seed + 1);
        const double rel = std::abs(est / target - 1.0);
        rows.push_back({"pi_norm_rel_dev", rel, 0.01, rel <= 0.01});
        double worst = 0.0;
        for (double frac : {0.25, 0.5, 1.0}) {
            worst = std::max(worst, estimate_shift_norm(p.alpha, frac * p.horizon_T, seed + 2, 4.0 * p.horizon_T));
        }
        const double cu = shift_norm_constant(p.alpha);
        rows.push_back({"shift_norm_vs_uniform_bound", worst, cu * 1.01, worst <= cu * 1.01});
    }
    return rows;
}

inline int cmd_basis_check(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    const auto rows = basis_invariants(cfg.params, cfg.seed);
    auto os = detail::open_out(out / "basis_check.csv");
    os << "invariant,value,threshold,pass\n";
    bool all = true;
    for (const auto& r : rows) {
        os << r.name << ',' << detail::num(r.value) << ',' << detail::num(r.threshold) << ',' << (r.pass ? 1 : 0)
           << '\n';
        log << (r.pass ? "PASS " : "FAIL ") << r.name << " = " << r.value << " (threshold " << r.threshold << ")\n";
        all = all && r.pass;
    }
    if (!all) {
        log << "failing invariants:";
        for (const auto& r : rows) {
            if (!r.pass) log << ' ' << r.name;
        }
        log << '\n';
    }
    return all ? ok : invariant_failure;
}

// ---------------------------------------------------------------------------
// truncation-rate

struct TruncationRow {
    int k = 0;
    double error_sq = 0.0;
    double c1_over_k = 0.0;
};

inline std::vector<TruncationRow> truncation_table(const Curve& f, const BasisParams& p, const std::vector<int>& ks) {
    const double c1 = compute_C1(f, p);
    std::vector<TruncationRow> rows;
    for (int k : ks) rows.push_back({k, truncation_error_sq(f, p.with_k(k)), c1 / k});
    return rows;
}

inline int cmd_truncation_rate(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    const auto setup = build_setup(cfg);
    const auto rows = truncation_table(setup.spec.f0, cfg.params, cfg.k_list);
    auto os = detail::open_out(out / "truncation_rate.csv");
    os << "k,error_sq,C1_over_k\n";
    bool bounded = true;
    std::vector<double> xs, ys, bs;
    for (const auto& r : rows) {
        os << r.k << ',' << detail::num(r.error_sq) << ',' << detail::num(r.c1_over_k) << '\n';
        bounded = bounded && r.error_sq <= r.c1_over_k;
        xs.push_back(r.k), ys.push_back(r.error_sq), bs.push_back(r.c1_over_k);
    }
    svg::write_file((out / "truncation_rate.svg").string(),
                    svg::loglog_plot({{"error^2", xs, ys, "#1f77b4"}, {"C1/k", xs, bs, "#d62728"}},
                                     "truncation error", "k", "squared norm"));
    std::size_t positive = 0;
    for (double y : ys) positive += y > 0 ? 1 : 0;
    if (positive >= 2) {
        log << "slope: " << svg::loglog_slope(xs, ys) << '\n';
    } else {
        log << "slope: n/a (errors vanish)\n";
    }
    if (!bounded) log << "error_sq exceeds C1/k for some k\n";
    return bounded ? ok : invariant_failure;
}

// ---------------------------------------------------------------------------
// simulate

inline int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
    const auto setup = build_setup(cfg);
    const TimeGrid grid = TimeGrid::uniform(cfg.t_eval, cfg.time_step);
    const BasisParams& p = cfg.params;
    const double T = p.horizon_T;
    constexpr std::size_t xpoints = 65;
    auto scen = detail::open_out(out / "scenario.csv");
    auto orac = detail::open_out(out / "oracle.csv");
    auto deliv = detail::open_out(out / "delivery.csv");
    scen << "path_id,t,x,f\n";
    orac << "path_id,t,x,f\n";
    deliv << "path_id,t,T1,T2,F\n";
    nlohmann::json slices = nlohmann::json::array();
    for (std::size_t path = 0; path < cfg.scenario_paths; ++path) {
        const NoiseRecord noise = setup.driver.draw(path, grid.n_steps, grid.dt);
        const auto [sim, sv] = simulate_fk_state(setup.spec, setup.driver, grid, p.k, noise);
        const SimPath truth = oracle_mild_solution(setup.spec, setup.driver, grid, noise);
        for (std::size_t j = 0; j <= grid.n_steps; ++j) {
            const double t = grid.time(j);
            const CurveEvaluator ev(truth.curves[j]);
            for (std::size_t q = 0; q < xpoints; ++q) {
                const double x = (T - t) * static_cast<double>(q) / static_cast<double>(xpoints - 1);
                scen << path << ',' << detail::num(t) << ',' << detail::num(x) << ','
                     << detail::num(reconstruct(sim.states[j], x).real()) << '\n';
                orac << path << ',' << detail::num(t) << ',' << detail::num(x) << ','
                     << detail::num(ev.value(x).real()) << '\n';
            }
            nlohmann::json slice;
            slice["path_id"] = path;
            slice["t"] = t;
            slice["state"] = to_json(sim.states[j]);
            slices.push_back(std::move(slice));
        }
        for (const auto& w : cfg.delivery_windows) {
            deliv << path << ',' << detail::num(cfg.t_eval) << ',' << detail::num(w[0]) << ',' << detail::num(w[1])
                  << ',' << detail::num(delivery_forward(sim.states.back(), cfg.t_eval, w[0], w[1]).real()) << '\n';
        }
    }
    auto js = detail::open_out(out / "coefficients.json");
    js << slices.dump(1) << '\n';
    nlohmann::json meta;
    meta["seed"] = cfg.seed;
    meta["paths"] = cfg.scenario_paths;
    meta["dt"] = grid.dt;
    meta["n_steps"] = grid.n_steps;
    meta["k"] = p.k;
    auto ms = detail::open_out(out / "simulate_meta.json");
    ms << meta.dump(1) << '\n';
    log << "wrote " << cfg.scenario_paths << " paths, " << grid.n_steps << " steps, seed " << cfg.seed << '\n';
    return ok;
}

// ---------------------------------------------------------------------------
// converge

namespace detail {

// Errors must not increase in k by more than two combined standard errors.
inline bool monotone_within_noise(const std::vector<ConvergenceRow>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double tol = 2.0 * std::hypot(rows[i].stderr_, rows[i - 1].stderr_);
        if (rows[i].mc_error > rows[i - 1].mc_error + tol) return false;
    }
    return true;
}

}  // namespace detail

inline int cmd_converge(const ExperimentConfig& cfg, bool markovian, const std::filesystem::path& out,
                        std::ostream& log) {
    const auto setup = build_setup(cfg);
    std::vector<ConvergenceRow> rows;
    bool pass = true;
    if (markovian) {
        const CoefficientField cf = build_field(cfg, setup);
        const auto audit = audit_contracts(cf, setup.spec, 1000, cfg.seed, false);
        for (const auto& v : audit.violations) log << "contract violation: " << v << '\n';
        if (!audit.ok()) return invariant_failure;
        MarkovSettings ms;
        ms.dt = cfg.markov_time_step;
        ms.t_end = cfg.params.horizon_T;
        ms.k_list = cfg.k_list;
        ms.n_paths = cfg.markov_paths;
        rows = markovian_convergence_experiment(cf, setup.spec, setup.driver, ms);
        for (auto& r : rows) r.bound = std::numeric_limits<double>::quiet_NaN();
    } else {
        ConvergenceSettings cs;
        cs.t_eval = cfg.t_eval;
        cs.dt = cfg.time_step;
        cs.k_list = cfg.k_list;
        cs.n_paths = cfg.n_paths;
        const auto rep = convergence_experiment(setup.spec, setup.driver, cs);
        rows = rep.rows;
        log << "A(t) = " << rep.rate.A << " (E C1 = " << rep.rate.mean_C1 << ")\n";
        for (const auto& r : rows) {
            if (r.mc_error > r.bound) {
                log << "bound violated at k = " << r.k << '\n';
                pass = false;
            }
        }
    }
    if (!detail::monotone_within_noise(rows)) {
        log << "error is not decreasing in k\n";
        pass = false;
    }
    const std::string stem = markovian ? "converge_markovian" : "converge";
    auto os = detail::open_out(out / (stem + ".csv"));
    os << "k,mc_error,stderr,bound\n";
    std::vector<double> xs, ys, bs;
    for (const auto& r : rows) {
        os << r.k << ',' << detail::num(r.mc_error) << ',' << detail::num(r.stderr_) << ',' << detail::num(r.bound)
           << '\n';
        xs.push_back(r.k), ys.push_back(r.mc_error), bs.push_back(r.bound);
        log << "k=" << r.k << " mc_error=" << r.mc_error << " stderr=" << r.stderr_ << " bound=" << r.bound << '\n';
    }
    // long-form report with the run's sample size and seed for replay
    auto rs = detail::open_out(out / (stem + "_report.csv"));
    rs << "k,mc_error,bound_A_over_k,n_paths,seed\n";
    for (const auto& r : rows) {
        rs << r.k << ',' << detail::num(r.mc_error) << ',' << detail::num(r.bound) << ','
           << (markovian ? cfg.markov_paths : cfg.n_paths) << ',' << cfg.seed << '\n';
    }
    std::vector<svg::Series> series{{"E sup error^2", xs, ys, "#1f77b4"}};
    if (!markovian) series.push_back({"A(t)/k", xs, bs, "#d62728"});
    svg::write_file((out / (stem + ".svg")).string(),
                    svg::loglog_plot(series, markovian ? "Markovian convergence" : "convergence", "k", "squared sup error"));
    nlohmann::json meta;
    meta["n_paths"] = markovian ? cfg.markov_paths : cfg.n_paths;
    meta["seed"] = cfg.seed;
    meta["slope"] = xs.size() >= 2 ? svg::loglog_slope(xs, ys) : 0.0;
    auto ms = detail::open_out(out / (stem + "_meta.json"));
    ms << meta.dump(1) << '\n';
    log << "slope: " << meta["slope"].get<double>() << '\n';
    return pass ? ok : invariant_failure;
}

/// Maps library exceptions onto exit codes.
template <class F>
int guarded(F&& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ContractViolation& e) {
        err << "invariant failure: " << e.what() << '\n';
        return invariant_failure;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    }
}

}  // namespace hjmm::cli
