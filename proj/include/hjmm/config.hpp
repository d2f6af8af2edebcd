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

// JSON experiment configuration and the builtin curve catalogue.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hjmm/dynamics.hpp"
#include "hjmm/markovian.hpp"

namespace hjmm {

/// Rejected configuration; the message names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The designated C^2 test curve: 1 + 0.25 x + 0.3 exp(-((x - 0.45) / 0.12)^2).
inline double bump_value(double x) { return 1.0 + 0.25 * x + 0.3 * std::exp(-std::pow((x - 0.45) / 0.12, 2)); }

inline double bump_derivative(double x) {
    const double u = (x - 0.45) / 0.12;
    return 0.25 - 0.3 * 2.0 * u / 0.12 * std::exp(-u * u);
}

/// Builtin curves, sampled on [0, x_max] with `points` grid points:
///   bump, zero, const(c), linear(a,b) = a + b x, exp(a,kappa) = a e^{-kappa x},
///   hump(a,c,w) = a exp(-((x-c)/w)^2).
/// Any other string is read as a CSV path relative to `base_dir` and resampled.
inline Curve resolve_curve(const std::string& text, double x_max, std::size_t points,
                           const std::filesystem::path& base_dir = {}) {
    const FieldSpec fs = parse_field_spec(text);
    auto nums = [&](std::size_t n) {
        if (fs.args.size() != n) throw ConfigError("curve '" + text + "' takes " + std::to_string(n) + " arguments");
        std::vector<double> v;
        for (const auto& a : fs.args) v.push_back(detail::parse_number(a, text));
        return v;
    };
    auto sample = [&](double v0, auto fp) {
        return Curve::from_derivative(v0, [&](double x) { return cplx(fp(x)); }, x_max, points);
    };
    if (fs.name == "bump" && fs.args.empty()) return sample(bump_value(0.0), bump_derivative);
    if (fs.name == "zero" && fs.args.empty()) return sample(0.0, [](double) { return 0.0; });
    if (fs.name == "const") {
        const auto v = nums(1);
        return sample(v[0], [](double) { return 0.0; });
    }
    if (fs.name == "linear") {
        const auto v = nums(2);
        return sample(v[0], [b = v[1]](double) { return b; });
    }
    if (fs.name == "exp") {
        const auto v = nums(2);
        return sample(v[0], [a = v[0], k = v[1]](double x) { return -a * k * std::exp(-k * x); });
    }
    if (fs.name == "hump") {
        const auto v = nums(3);
        const double a = v[0], c = v[1], w = v[2];
        return sample(a * std::exp(-std::pow(c / w, 2)), [=](double x) {
            const double u = (x - c) / w;
            return -2.0 * a * u / w * std::exp(-u * u);
        });
    }
    std::filesystem::path path(text);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    if (!std::filesystem::exists(path)) throw ConfigError("unknown curve '" + text + "' (no builtin or file)");
    Curve c = read_curve_csv(path.string());
    if (c.x_max() < x_max * (1.0 - 1e-12)) {
        throw ConfigError("curve file '" + text + "' does not cover [0, " + std::to_string(x_max) + "]");
    }
    const double step = x_max / static_cast<double>(points - 1);
    if (std::abs(c.grid_step - step) > 1e-12 * step || c.deriv_samples.size() != points) c = resample(c, step, x_max);
    return c;
}

struct DriverConfig {
    std::string law = "gaussian";
    double nu = 0.2;
    double theta_shape = 0.2;
    std::vector<std::string> loadings{"exp(0.2,1.0)", "hump(0.15,0.3,0.25)", "linear(0.1,-0.05)"};
};

struct ExperimentConfig {
    BasisParams params{1.0, 0.5, 1.0, 16};
    std::size_t grid_points = default_grid_points;  ///< points on [0, 2T]
    std::string f0 = "bump";
    std::string beta = "zero";
    std::vector<double> psi_weights;                ///< constant weights, default 1
    DriverConfig driver;
    std::vector<int> k_list{4, 8, 16, 32, 64};
    std::size_t n_paths = 1000;
    double time_step = 1.0 / 256.0;
    double t_eval = 0.5;
    std::uint64_t seed = 20240611;
    std::string drift_field = "mean_revert(1.0,bump)";
    std::string vol_field = "proportional_vol(0.3)";
    std::size_t markov_paths = 64;
    double markov_time_step = 1.0 / 128.0;
    std::size_t scenario_paths = 4;                 ///< paths written by simulate
    std::vector<std::array<double, 2>> delivery_windows;
    std::filesystem::path base_dir;

    double x_max() const { return 2.0 * params.horizon_T; }

    /// Every invariant violation raises ConfigError naming the field.
    void validate() const {
        auto need = [](bool ok, const std::string& msg) {
            if (!ok) throw ConfigError(msg);
        };
        need(params.alpha > 0.0 && std::isfinite(params.alpha), "params.alpha must be positive");
        need(params.lambda > 0.0 && std::isfinite(params.lambda), "params.lambda must be positive");
        need(params.horizon_T > 0.0 && std::isfinite(params.horizon_T), "params.T must be positive");
        need(params.k >= 0, "params.k must be nonnegative");
        need(grid_points >= 5 && (grid_points - 1) % 2 == 0, "grid_points must be odd and >= 5");
        const double h = x_max() / static_cast<double>(grid_points - 1);
        need(static_cast<std::size_t>(2 * params.k + 1) <= (grid_points - 1) / 2,
             "params.k too large for grid_points");
        need(!k_list.empty(), "k_list must not be empty");
        for (std::size_t i = 0; i < k_list.size(); ++i) {
            need(k_list[i] >= 1, "k_list entries must be >= 1");
            need(i == 0 || k_list[i] > k_list[i - 1], "k_list must be strictly ascending");
            need(static_cast<std::size_t>(2 * k_list[i] + 1) <= (grid_points - 1) / 2,
                 "k_list entry too large for grid_points");
        }
        need(n_paths >= 1, "n_paths must be >= 1");
        need(markov_paths >= 1, "markov_paths must be >= 1");
        need(time_step > 0.0 && std::isfinite(time_step), "time_step must be positive");
        need(t_eval >= 0.0 && t_eval <= params.horizon_T, "t_eval must lie in [0, T]");
        need(grid_index(t_eval, time_step).has_value(), "time_step must divide t_eval");
        need(grid_index(time_step, h).has_value(), "time_step must be a multiple of the curve grid step");
        need(markov_time_step > 0.0 && grid_index(params.horizon_T, markov_time_step).has_value(),
             "markov_time_step must divide T");
        need(grid_index(markov_time_step, h).has_value(), "markov_time_step must be a multiple of the grid step");
        need(driver.law == "gaussian" || driver.law == "variance_gamma" || driver.law == "nig",
             "driver.law must be gaussian, variance_gamma or nig");
        need(driver.nu > 0.0, "driver.nu must be positive");
        need(driver.theta_shape > 0.0, "driver.theta_shape must be positive");
        need(!driver.loadings.empty(), "driver.loadings must not be empty");
        need(psi_weights.empty() || psi_weights.size() == driver.loadings.size(),
             "psi_weights must match the number of loadings");
        for (const auto& w : delivery_windows) {
            need(t_eval <= w[0] && w[0] < w[1] && w[1] <= params.horizon_T,
                 "delivery_windows need t_eval <= T1 < T2 <= T");
        }
    }
};

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, const T& fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + ctx + key + "' has the wrong type");
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    ExperimentConfig c;
    c.base_dir = base_dir;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        if (!p.is_object()) throw ConfigError("field 'params' must be an object");
        c.params.alpha = detail::get_or(p, "alpha", c.params.alpha, "params.");
        c.params.lambda = detail::get_or(p, "lambda", c.params.lambda, "params.");
        c.params.horizon_T = detail::get_or(p, "T", c.params.horizon_T, "params.");
        c.params.k = detail::get_or(p, "k", c.params.k, "params.");
    }
    c.grid_points = detail::get_or(j, "grid_points", c.grid_points, "");
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (!m.is_object()) throw ConfigError("field 'model' must be an object");
        c.f0 = detail::get_or(m, "f0", c.f0, "model.");
        c.beta = detail::get_or(m, "beta", c.beta, "model.");
        c.psi_weights = detail::get_or(m, "psi_weights", c.psi_weights, "model.");
    }
    if (j.contains("driver")) {
        const auto& d = j.at("driver");
        if (!d.is_object()) throw ConfigError("field 'driver' must be an object");
        c.driver.law = detail::get_or(d, "law", c.driver.law, "driver.");
        c.driver.nu = detail::get_or(d, "nu", c.driver.nu, "driver.");
        c.driver.theta_shape = detail::get_or(d, "theta_shape", c.driver.theta_shape, "driver.");
        c.driver.loadings = detail::get_or(d, "loadings", c.driver.loadings, "driver.");
    }
    c.k_list = detail::get_or(j, "k_list", c.k_list, "");
    c.n_paths = detail::get_or(j, "n_paths", c.n_paths, "");
    c.time_step = detail::get_or(j, "time_step", c.time_step, "");
    c.t_eval = detail::get_or(j, "t_eval", c.t_eval, "");
    c.seed = detail::get_or(j, "seed", c.seed, "");
    if (j.contains("markovian")) {
        const auto& m = j.at("markovian");
        if (!m.is_object()) throw ConfigError("field 'markovian' must be an object");
        c.drift_field = detail::get_or(m, "drift", c.drift_field, "markovian.");
        c.vol_field = detail::get_or(m, "vol", c.vol_field, "markovian.");
        c.markov_paths = detail::get_or(m, "n_paths", c.markov_paths, "markovian.");
        c.markov_time_step = detail::get_or(m, "time_step", c.markov_time_step, "markovian.");
    }
    c.scenario_paths = detail::get_or(j, "scenario_paths", c.scenario_paths, "");
    c.delivery_windows = detail::get_or(j, "delivery_windows", c.delivery_windows, "");
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is.good()) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, path.parent_path());
}

/// Curves, model and driver described by a configuration.
struct ExperimentSetup {
    ModelSpec spec;
    LevyDriver driver;
};

inline ExperimentSetup build_setup(const ExperimentConfig& c) {
    ExperimentSetup s;
    s.spec.params = c.params;
    auto curve = [&](const std::string& text) {
        try {
            return resolve_curve(text, c.x_max(), c.grid_points, c.base_dir);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError("curve '" + text + "': " + e.what());
        }
    };
    s.spec.f0 = curve(c.f0);
    if (c.beta != "zero") s.spec.beta_shape = curve(c.beta);
    for (double w : c.psi_weights) s.spec.psi_weights.push_back([w](double) { return w; });
    if (c.driver.law == "gaussian") s.driver.increment_law = IncrementLaw::gaussian();
    if (c.driver.law == "variance_gamma") s.driver.increment_law = IncrementLaw::variance_gamma(c.driver.nu);
    if (c.driver.law == "nig") s.driver.increment_law = IncrementLaw::nig(c.driver.theta_shape);
    for (const auto& l : c.driver.loadings) s.driver.loadings.push_back(curve(l));
    s.driver.seed = c.seed;
    s.spec.validate(s.driver);
    return s;
}

/// The Markovian field named by the configuration.
inline CoefficientField build_field(const ExperimentConfig& c, const ExperimentSetup& s) {
    const TimeGrid times = TimeGrid::uniform(c.params.horizon_T, c.markov_time_step);
    auto resolver = [&](const std::string& text) { return resolve_curve(text, c.x_max(), c.grid_points, c.base_dir); };
    try {
        return fields::combine(make_drift_field(c.drift_field, s.spec, times, resolver),
                               make_vol_field(c.vol_field, s.spec, s.driver, times));
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("markovian field: ") + e.what());
    }
}

}  // namespace hjmm
