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

// Finite-rank, mean-zero, square-integrable driver L = sum_i loading_i L_i
// with independent scalar factors L_i of unit variance rate.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hjmm/curve.hpp"
#include "hjmm/errors.hpp"
#include "hjmm/filipovic.hpp"

namespace hjmm {

enum class IncrementKind { gaussian, variance_gamma, nig };

/// Scalar increment law. Every law has mean 0 and variance dt over a step dt.
///
/// variance_gamma: sqrt(G) Z with G ~ Gamma(dt / nu, nu).
/// nig: sqrt(S) Z with S inverse Gaussian of mean dt and variance theta_shape * dt.
struct IncrementLaw {
    IncrementKind kind = IncrementKind::gaussian;
    double nu = 0.0;
    double theta_shape = 0.0;

    static IncrementLaw gaussian() { return {}; }
    static IncrementLaw variance_gamma(double nu) { return {IncrementKind::variance_gamma, nu, 0.0}; }
    static IncrementLaw nig(double theta_shape) { return {IncrementKind::nig, 0.0, theta_shape}; }

    void validate() const {
        if (kind == IncrementKind::variance_gamma) {
            HJMM_REQUIRE(nu > 0.0 && std::isfinite(nu), InvalidArgument, "variance gamma needs nu > 0");
        }
        if (kind == IncrementKind::nig) {
            HJMM_REQUIRE(theta_shape > 0.0 && std::isfinite(theta_shape), InvalidArgument,
                         "nig needs theta_shape > 0");
        }
    }

    std::string name() const {
        switch (kind) {
            case IncrementKind::gaussian: return "gaussian";
            case IncrementKind::variance_gamma: return "variance_gamma";
            case IncrementKind::nig: return "nig";
        }
        return "unknown";
    }
};

/// splitmix64 finalizer, used to spread path indices over the seed space.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for one Monte-Carlo path.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_id) {
    return std::mt19937_64(seed ^ splitmix64(path_id));
}

namespace detail {

// Michael, Schucany and Haas transformation for the inverse Gaussian law.
inline double inverse_gaussian(std::mt19937_64& rng, double mean, double shape) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    const double v = nd(rng);
    const double y = v * v;
    const double x = mean + mean * mean * y / (2.0 * shape) -
                     mean / (2.0 * shape) * std::sqrt(4.0 * mean * shape * y + mean * mean * y * y);
    if (ud(rng) <= mean / (mean + x)) return x;
    return mean * mean / x;
}

}  // namespace detail

/// One increment of the scalar law over dt.
inline double draw_increment(std::mt19937_64& rng, const IncrementLaw& law, double dt) {
    std::normal_distribution<double> nd;
    switch (law.kind) {
        case IncrementKind::gaussian: return std::sqrt(dt) * nd(rng);
        case IncrementKind::variance_gamma: {
            std::gamma_distribution<double> gd(dt / law.nu, law.nu);
            const double g = gd(rng);
            return std::sqrt(g) * nd(rng);
        }
        case IncrementKind::nig: {
            const double s = detail::inverse_gaussian(rng, dt, dt * dt / law.theta_shape);
            return std::sqrt(s) * nd(rng);
        }
    }
    return 0.0;
}

/// Increments of the d scalar factors over n_steps steps, row-major [step][factor].
struct NoiseRecord {
    std::size_t n_steps = 0;
    std::size_t rank = 0;
    std::vector<double> increments;

    double at(std::size_t step, std::size_t factor) const { return increments[step * rank + factor]; }
    double& at(std::size_t step, std::size_t factor) { return increments[step * rank + factor]; }

    static NoiseRecord zeros(std::size_t n_steps, std::size_t rank) {
        return {n_steps, rank, std::vector<double>(n_steps * rank, 0.0)};
    }
};

/// L = sum_i loadings[i] L_i; the covariance is Q = sum_i loadings[i] (x) loadings[i].
struct LevyDriver {
    std::vector<Curve> loadings;
    IncrementLaw increment_law;
    std::uint64_t seed = 0;

    std::size_t rank() const { return loadings.size(); }

    void validate() const {
        HJMM_REQUIRE(!loadings.empty(), InvalidArgument, "driver needs at least one factor");
        for (const auto& l : loadings) l.validate();
        increment_law.validate();
    }

    /// Noise for path `path_id` on a uniform step dt.
    NoiseRecord draw(std::uint64_t path_id, std::size_t n_steps, double dt) const {
        auto rng = path_rng(seed, path_id);
        NoiseRecord rec = NoiseRecord::zeros(n_steps, rank());
        for (std::size_t s = 0; s < n_steps; ++s) {
            for (std::size_t i = 0; i < rank(); ++i) rec.at(s, i) = draw_increment(rng, increment_law, dt);
        }
        return rec;
    }

    /// tr Q = sum_i ||loading_i||_alpha^2.
    double trace_Q(double alpha) const {
        double tr = 0.0;
        for (const auto& l : loadings) tr += std::pow(norm_alpha(l, alpha), 2);
        return tr;
    }
};

}  // namespace hjmm
