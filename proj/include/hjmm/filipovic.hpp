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

// Inner product, norm, the isometry Theta : H_alpha -> C x L^2 and the
// sup-norm embedding bound, realized on sampled curves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hjmm/curve.hpp"

namespace hjmm {

namespace detail {

// int f'(x) conj(g'(x)) e^{alpha x} dx over the sample range [i0, i1] of
// the given spans (same step); x0 is the abscissa of index 0.
inline cplx weighted_product_integral(std::span<const cplx> f, std::span<const cplx> g, double h, double x0,
                                      double alpha, QuadratureRule rule) {
    const std::size_t n = std::min(f.size(), g.size());
    if (n < 2) return {};
    const auto w = quadrature_weights(n - 1, h, rule);
    cplx acc{};
    for (std::size_t j = 0; j < n; ++j) {
        acc += w[j] * f[j] * std::conj(g[j]) * std::exp(alpha * (x0 + h * static_cast<double>(j)));
    }
    return acc;
}

inline std::size_t period_intervals(const BasisParams& p, double h) {
    auto n = grid_index(p.horizon_T, h);
    HJMM_REQUIRE(n.has_value() && *n >= 1, GridMismatch, "T must be a grid multiple");
    return *n;
}

// Localized f against plain g over g's range, period by period.
inline cplx mixed_integral(const Curve& loc, const Curve& plain, double alpha, QuadratureRule rule,
                           bool loc_first) {
    const BasisParams& p = *loc.localized;
    const double h = plain.grid_step;
    const std::size_t nT = period_intervals(p, h);
    const std::size_t total = plain.intervals();
    const double q = p.period_decay();
    cplx acc{};
    double scale = 1.0;
    for (std::size_t start = 0; start < total; start += nT) {
        const std::size_t len = std::min(nT, total - start);
        std::vector<cplx> seg(len + 1);
        for (std::size_t j = 0; j <= len; ++j) seg[j] = scale * loc.deriv_samples[j];
        std::span<const cplx> pl(plain.deriv_samples.data() + start, len + 1);
        const double x0 = h * static_cast<double>(start);
        acc += loc_first ? weighted_product_integral(seg, pl, h, x0, alpha, rule)
                         : weighted_product_integral(pl, seg, h, x0, alpha, rule);
        scale *= q;
    }
    return acc;
}

}  // namespace detail

/// <f, g>_alpha = f(0) conj(g(0)) + int_0^inf f'(x) conj(g'(x)) e^{alpha x} dx.
///
/// Plain curves contribute nothing beyond x_max; localized curves contribute
/// their geometric tail exactly. Mismatched steps raise GridMismatch unless
/// `allow_resample` is set, in which case g is resampled onto f's step.
inline cplx inner_product_alpha(const Curve& f, const Curve& g, double alpha, const QuadratureSpec& q = {},
                                bool allow_resample = false) {
    if (!same_step(f, g)) {
        HJMM_REQUIRE(allow_resample, GridMismatch, "inner product of curves on different grids");
        return inner_product_alpha(f, resample(g, f.grid_step, g.localized ? std::nullopt
                                                                              : std::optional<double>(g.x_max())),
                                   alpha, q, false);
    }
    const double h = f.grid_step;
    const cplx head = f.value_at_zero * std::conj(g.value_at_zero);
    if (f.localized && g.localized) {
        const BasisParams& pf = *f.localized;
        const BasisParams& pg = *g.localized;
        HJMM_REQUIRE(std::abs(pf.horizon_T - pg.horizon_T) < 1e-12 && std::abs(pf.alpha - pg.alpha) < 1e-12,
                     GridMismatch, "localized curves with different horizons");
        HJMM_REQUIRE(std::abs(pf.alpha - alpha) < 1e-12, InvalidArgument, "alpha differs from curve basis");
        const double ratio = pf.period_decay() * pg.period_decay() * std::exp(alpha * pf.horizon_T);
        return head + detail::weighted_product_integral(f.deriv_samples, g.deriv_samples, h, 0.0, alpha, q.rule) /
                          (1.0 - ratio);
    }
    if (f.localized) return head + detail::mixed_integral(f, g, alpha, q.rule, true);
    if (g.localized) return head + detail::mixed_integral(g, f, alpha, q.rule, false);
    return head + detail::weighted_product_integral(f.deriv_samples, g.deriv_samples, h, 0.0, alpha, q.rule);
}

inline double norm_alpha(const Curve& f, double alpha, const QuadratureSpec& q = {}) {
    return std::sqrt(std::max(0.0, inner_product_alpha(f, f, alpha, q).real()));
}

struct SupNormBound {
    double bound = 0.0;     ///< sqrt(1 + 1/alpha) ||f||_alpha
    double grid_sup = 0.0;  ///< max |f| over the represented grid
};

/// sup |f| <= sqrt(1 + 1/alpha) ||f||_alpha, alongside the observed grid sup.
inline SupNormBound sup_norm_bound(const Curve& f, double alpha, const QuadratureSpec& q = {}) {
    SupNormBound out;
    out.bound = std::sqrt(1.0 + 1.0 / alpha) * norm_alpha(f, alpha, q);
    CurveEvaluator ev(f);
    for (const auto& v : ev.grid_values()) out.grid_sup = std::max(out.grid_sup, std::abs(v));
    return out;
}

/// Image of a curve under Theta: (f(0), w_alpha f') with w_alpha(x) = e^{alpha x / 2}.
struct ThetaImage {
    cplx z{};
    std::vector<cplx> h;  ///< samples of w_alpha f' on the curve grid
    double grid_step = 0.0;
};

inline ThetaImage theta(const Curve& f, double alpha) {
    ThetaImage out{f.value_at_zero, f.deriv_samples, f.grid_step};
    for (std::size_t j = 0; j < out.h.size(); ++j) out.h[j] *= std::exp(0.5 * alpha * f.x(j));
    return out;
}

/// Theta^{-1}(z, h) = z + int_0^. w_alpha^{-1}(y) h(y) dy as a plain curve.
inline Curve theta_inv(cplx z, std::span<const cplx> h, double grid_step, double alpha) {
    Curve c;
    c.value_at_zero = z;
    c.grid_step = grid_step;
    c.deriv_samples.assign(h.begin(), h.end());
    for (std::size_t j = 0; j < c.deriv_samples.size(); ++j) c.deriv_samples[j] *= std::exp(-0.5 * alpha * c.x(j));
    return c;
}

inline Curve theta_inv(const ThetaImage& im, double alpha) { return theta_inv(im.z, im.h, im.grid_step, alpha); }

/// Norm in C x L^2 of a Theta image, using the same quadrature.
inline double theta_norm(const ThetaImage& im, const QuadratureSpec& q = {}) {
    std::vector<double> sq(im.h.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = std::norm(im.h[j]);
    return std::sqrt(std::norm(im.z) + integrate_samples<double>(sq, im.grid_step, q.rule));
}

// ---------------------------------------------------------------------------
// CSV I/O: header `x,f,fprime`, one row per grid point. Complex curves are not
// representable in this format; the writer emits real parts.

inline void write_curve_csv(std::ostream& os, const Curve& c) {
    CurveEvaluator ev(c);
    os << "x,f,fprime\n";
    os << std::setprecision(17);
    for (std::size_t j = 0; j < c.deriv_samples.size(); ++j) {
        os << c.x(j) << ',' << ev.grid_values()[j].real() << ',' << c.deriv_samples[j].real() << '\n';
    }
}

inline void write_curve_csv(const std::string& path, const Curve& c) {
    std::ofstream os(path);
    HJMM_REQUIRE(os.good(), Error, "cannot open " + path + " for writing");
    write_curve_csv(os, c);
}

inline Curve read_curve_csv(std::istream& is) {
    std::string line;
    HJMM_REQUIRE(static_cast<bool>(std::getline(is, line)), InvalidArgument, "empty curve file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    HJMM_REQUIRE(line == "x,f,fprime", InvalidArgument, "curve CSV header must be x,f,fprime");
    std::vector<double> xs, fs, ds;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string a, b, c;
        HJMM_REQUIRE(std::getline(ss, a, ',') && std::getline(ss, b, ',') && std::getline(ss, c), InvalidArgument,
                     "malformed curve row: " + line);
        xs.push_back(std::stod(a));
        fs.push_back(std::stod(b));
        ds.push_back(std::stod(c));
    }
    HJMM_REQUIRE(xs.size() >= 2, InvalidArgument, "curve CSV needs at least two rows");
    HJMM_REQUIRE(xs.front() == 0.0, InvalidArgument, "curve CSV must start at x = 0");
    const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t j = 1; j < xs.size(); ++j) {
        HJMM_REQUIRE(std::abs(xs[j] - h * static_cast<double>(j)) <= 1e-9 * std::max(1.0, xs.back()),
                     InvalidArgument, "curve CSV grid must be uniform");
    }
    Curve c;
    c.value_at_zero = fs.front();
    c.grid_step = h;
    c.deriv_samples.assign(ds.begin(), ds.end());
    return c;
}

inline Curve read_curve_csv(const std::string& path) {
    std::ifstream is(path);
    HJMM_REQUIRE(is.good(), InvalidArgument, "cannot open curve file " + path);
    return read_curve_csv(is);
}

}  // namespace hjmm
