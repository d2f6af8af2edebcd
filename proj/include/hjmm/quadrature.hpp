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
#include <cstddef>
#include <span>
#include <vector>

#include "hjmm/errors.hpp"

namespace hjmm {

enum class QuadratureRule { trapezoid, simpson };

struct QuadratureSpec {
    QuadratureRule rule = QuadratureRule::simpson;
    double tolerance = 1e-10;
};

/// Composite weights for `intervals` uniform intervals of width h.
///
/// Simpson with an odd interval count closes with the 3/8 rule on the last
/// three intervals; a single interval falls back to the trapezoid.
inline std::vector<double> quadrature_weights(std::size_t intervals, double h, QuadratureRule rule) {
    std::vector<double> w(intervals + 1, 0.0);
    if (intervals == 0) return w;
    if (rule == QuadratureRule::trapezoid || intervals == 1) {
        for (std::size_t j = 0; j <= intervals; ++j) w[j] = h;
        w.front() = w.back() = 0.5 * h;
        return w;
    }
    std::size_t simpson_end = intervals;
    if (intervals % 2 == 1) simpson_end = intervals - 3;
    for (std::size_t j = 0; j + 2 <= simpson_end; j += 2) {
        w[j] += h / 3.0;
        w[j + 1] += 4.0 * h / 3.0;
        w[j + 2] += h / 3.0;
    }
    if (simpson_end != intervals) {
        const std::size_t j = simpson_end;
        w[j] += 3.0 * h / 8.0;
        w[j + 1] += 9.0 * h / 8.0;
        w[j + 2] += 9.0 * h / 8.0;
        w[j + 3] += 3.0 * h / 8.0;
    }
    return w;
}

template <class T>
T integrate_samples(std::span<const T> samples, double h, QuadratureRule rule) {
    if (samples.size() < 2) return T{};
    const auto w = quadrature_weights(samples.size() - 1, h, rule);
    T acc{};
    for (std::size_t j = 0; j < samples.size(); ++j) acc += w[j] * samples[j];
    return acc;
}

/// Fourth-order cumulative integral of uniformly sampled data; out[j] = int_0^{x_j}.
template <class T>
std::vector<T> cumulative_integral(std::span<const T> d, double h) {
    const std::size_t n = d.size();
    std::vector<T> out(n, T{});
    if (n < 2) return out;
    if (n < 4) {
        for (std::size_t j = 1; j < n; ++j) out[j] = out[j - 1] + 0.5 * h * (d[j - 1] + d[j]);
        return out;
    }
    const double c = h / 24.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        T piece;
        if (j == 0) {
            piece = c * (9.0 * d[0] + 19.0 * d[1] - 5.0 * d[2] + d[3]);
        } else if (j + 2 >= n) {
            piece = c * (d[j - 2] - 5.0 * d[j - 1] + 19.0 * d[j] + 9.0 * d[j + 1]);
        } else {
            piece = c * (-d[j - 1] + 13.0 * d[j] + 13.0 * d[j + 1] - d[j + 2]);
        }
        out[j + 1] = out[j] + piece;
    }
    return out;
}

/// 4-point Lagrange interpolation at fractional index u in [0, n-1].
template <class T>
T cubic_interpolate(std::span<const T> d, double u) {
    const std::size_t n = d.size();
    if (n == 0) return T{};
    if (n == 1) return d[0];
    if (u <= 0.0) return d[0];
    if (u >= static_cast<double>(n - 1)) return d[n - 1];
    auto j = static_cast<std::size_t>(std::floor(u));
    const double frac = u - static_cast<double>(j);
    if (frac == 0.0) return d[j];
    if (n < 4) return (1.0 - frac) * d[j] + frac * d[j + 1];
    std::size_t s = (j == 0) ? 0 : j - 1;
    if (s + 3 >= n) s = n - 4;
    const double t = u - static_cast<double>(s);
    const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    return l0 * d[s] + l1 * d[s + 1] + l2 * d[s + 2] + l3 * d[s + 3];
}

}  // namespace hjmm
