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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hjmm/basis.hpp"
#include "hjmm/errors.hpp"
#include "hjmm/quadrature.hpp"

namespace hjmm {

/// Default grid: 2^12 + 1 points on [0, 2T].
inline constexpr std::size_t default_grid_points = 4097;

/// An element of H_alpha stored as f(0) plus samples of f' on a uniform grid
/// over [0, x_max].
///
/// Two tail conventions exist. A plain curve has f' = 0 beyond x_max. A
/// localized curve (an element of H_alpha^T) stores one period [0, T],
/// x_max == T, with the last sample holding the left limit f'(T-); beyond T
/// f'(mT + r) = e^{-(lambda + alpha/2) m T} f'(r).
struct Curve {
    cplx value_at_zero{};
    std::vector<cplx> deriv_samples;
    double grid_step = 0.0;
    std::optional<BasisParams> localized;

    std::size_t intervals() const { return deriv_samples.empty() ? 0 : deriv_samples.size() - 1; }
    double x_max() const { return grid_step * static_cast<double>(intervals()); }
    double x(std::size_t j) const { return grid_step * static_cast<double>(j); }
    bool is_localized() const { return localized.has_value(); }

    void validate() const {
        HJMM_REQUIRE(deriv_samples.size() >= 2, InvalidArgument, "curve needs at least two samples");
        HJMM_REQUIRE(grid_step > 0.0, InvalidArgument, "grid_step must be positive");
        if (localized) {
            HJMM_REQUIRE(std::abs(x_max() - localized->horizon_T) <= 1e-9 * localized->horizon_T,
                         InvalidArgument, "localized curve must span exactly [0, T]");
        }
    }

    /// Plain curve sampled from a derivative function.
    static Curve from_derivative(cplx value0, const std::function<cplx(double)>& fprime, double x_max,
                                 std::size_t points = default_grid_points) {
        HJMM_REQUIRE(points >= 2 && x_max > 0.0, InvalidArgument, "bad grid");
        Curve c;
        c.value_at_zero = value0;
        c.grid_step = x_max / static_cast<double>(points - 1);
        c.deriv_samples.resize(points);
        for (std::size_t j = 0; j < points; ++j) c.deriv_samples[j] = fprime(c.x(j));
        return c;
    }

    /// Localized curve from its derivative on the closed base period [0, T].
    static Curve localized_from(const BasisParams& p, cplx value0,
                                const std::function<cplx(double)>& base_fprime,
                                std::size_t intervals_per_period) {
        HJMM_REQUIRE(intervals_per_period >= 2, InvalidArgument, "bad grid");
        Curve c;
        c.value_at_zero = value0;
        c.grid_step = p.horizon_T / static_cast<double>(intervals_per_period);
        c.localized = p;
        c.deriv_samples.resize(intervals_per_period + 1);
        for (std::size_t j = 0; j <= intervals_per_period; ++j) {
            c.deriv_samples[j] = base_fprime(j == intervals_per_period ? p.horizon_T : c.x(j));
        }
        return c;
    }

    friend Curve operator+(Curve a, const Curve& b);
    friend Curve operator-(Curve a, const Curve& b);
    friend Curve operator*(cplx s, Curve a) {
        a.value_at_zero *= s;
        for (auto& d : a.deriv_samples) d *= s;
        return a;
    }
};

/// Index j with j * h == x (within rounding), if any.
inline std::optional<std::size_t> grid_index(double x, double h) {
    const double u = x / h;
    const double r = std::round(u);
    if (r < 0.0 || std::abs(u - r) > 1e-8 * std::max(1.0, u)) return std::nullopt;
    return static_cast<std::size_t>(r);
}

inline bool same_step(const Curve& a, const Curve& b) {
    return std::abs(a.grid_step - b.grid_step) <= 1e-12 * std::max(a.grid_step, b.grid_step);
}

/// Pointwise sum; both curves must share grid and tail convention.
inline Curve operator+(Curve a, const Curve& b) {
    HJMM_REQUIRE(same_step(a, b) && a.deriv_samples.size() == b.deriv_samples.size(), GridMismatch,
                 "curve sum needs identical grids");
    HJMM_REQUIRE(a.localized == b.localized, GridMismatch, "curve sum needs identical tails");
    a.value_at_zero += b.value_at_zero;
    for (std::size_t j = 0; j < a.deriv_samples.size(); ++j) a.deriv_samples[j] += b.deriv_samples[j];
    return a;
}

inline Curve operator-(Curve a, const Curve& b) { return a + (-1.0) * b; }

/// f'(y) for any y >= 0, honoring the tail convention. At a period boundary of a
/// localized curve the right limit is returned.
inline cplx derivative_at(const Curve& c, double y) {
    if (c.localized) {
        const double T = c.localized->horizon_T;
        const double r = cut(y, T);
        const long m = period_index(y, T);
        const double scale = std::exp(-c.localized->decay() * T * static_cast<double>(m));
        return scale * cubic_interpolate<cplx>(c.deriv_samples, r / c.grid_step);
    }
    if (y > c.x_max() * (1.0 + 1e-14)) return cplx{};
    return cubic_interpolate<cplx>(c.deriv_samples, y / c.grid_step);
}

/// Caches grid values so repeated point evaluation is cheap.
class CurveEvaluator {
public:
    explicit CurveEvaluator(const Curve& c) : curve_(&c) {
        auto integral = cumulative_integral<cplx>(c.deriv_samples, c.grid_step);
        values_.resize(integral.size());
        for (std::size_t j = 0; j < integral.size(); ++j) values_[j] = c.value_at_zero + integral[j];
    }

    const std::vector<cplx>& grid_values() const { return values_; }

    /// f(x) by cubic Hermite interpolation of grid values and derivatives.
    cplx value(double x) const {
        const Curve& c = *curve_;
        if (c.localized) {
            const double T = c.localized->horizon_T;
            const double q = c.localized->period_decay();
            const long m = period_index(x, T);
            const double r = cut(x, T);
            if (m == 0) return local_value(r);
            const double qm = std::pow(q, static_cast<double>(m));
            const cplx rise = values_.back() - c.value_at_zero;
            const double geo = -std::expm1(static_cast<double>(m) * std::log(q)) / (1.0 - q);
            return c.value_at_zero + rise * geo + qm * (local_value(r) - c.value_at_zero);
        }
        if (x >= c.x_max()) return values_.back();
        return local_value(x);
    }

private:
    cplx local_value(double x) const {
        const Curve& c = *curve_;
        const double h = c.grid_step;
        const double u = x / h;
        auto j = static_cast<std::size_t>(std::floor(u));
        if (j >= c.intervals()) return values_.back();
        const double s = u - static_cast<double>(j);
        if (s == 0.0) return values_[j];
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s * s * (3.0 - 2.0 * s);
        const double h11 = s * s * (s - 1.0);
        return h00 * values_[j] + h10 * h * c.deriv_samples[j] + h01 * values_[j + 1] +
               h11 * h * c.deriv_samples[j + 1];
    }

    const Curve* curve_;
    std::vector<cplx> values_;
};

inline cplx value_at(const Curve& c, double x) { return CurveEvaluator(c).value(x); }

/// Plain curve on [0, x_max] with the same step, sampling derivative_at (right limits).
inline Curve materialize(const Curve& c, double x_max) {
    auto n = grid_index(x_max, c.grid_step);
    HJMM_REQUIRE(n.has_value() && *n >= 1, InvalidArgument, "materialize extent must be a grid multiple");
    Curve out;
    out.value_at_zero = c.value_at_zero;
    out.grid_step = c.grid_step;
    out.deriv_samples.resize(*n + 1);
    for (std::size_t j = 0; j <= *n; ++j) {
        if (!c.localized && j <= c.intervals()) {
            out.deriv_samples[j] = c.deriv_samples[j];
        } else {
            out.deriv_samples[j] = derivative_at(c, out.x(j));
        }
    }
    return out;
}

/// Resample onto a new step by cubic interpolation of the derivative.
inline Curve resample(const Curve& c, double new_step, std::optional<double> new_x_max = std::nullopt) {
    HJMM_REQUIRE(new_step > 0.0, InvalidArgument, "resample step must be positive");
    const double extent = new_x_max.value_or(c.x_max());
    const auto n = static_cast<std::size_t>(std::floor(extent / new_step + 1e-9));
    HJMM_REQUIRE(n >= 1, InvalidArgument, "resample extent too short");
    Curve out;
    out.value_at_zero = c.value_at_zero;
    out.grid_step = new_step;
    out.localized = c.localized;
    if (c.localized) {
        HJMM_REQUIRE(grid_index(c.localized->horizon_T, new_step).has_value(), GridMismatch,
                     "localized resample must keep T on the grid");
    }
    out.deriv_samples.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        out.deriv_samples[j] = cubic_interpolate<cplx>(c.deriv_samples, out.x(j) / c.grid_step);
    }
    return out;
}

/// Derivative samples of a curve on [0, T] (left limit at T for localized curves).
inline std::span<const cplx> base_period(const Curve& c, double T) {
    auto n = grid_index(T, c.grid_step);
    HJMM_REQUIRE(n.has_value(), GridMismatch, "T is not a grid point of the curve");
    HJMM_REQUIRE(*n <= c.intervals(), DomainTooShort, "curve grid does not cover [0, T]");
    return std::span<const cplx>(c.deriv_samples.data(), *n + 1);
}

}  // namespace hjmm
