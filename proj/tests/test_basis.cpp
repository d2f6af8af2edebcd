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

#include <gtest/gtest.h>

#include <cmath>

#include "hjmm/basis.hpp"
#include "oracles.hpp"

namespace {

using hjmm::BasisParams;
using hjmm::cplx;

const BasisParams kP{1.0, 0.5, 1.0, 8};

TEST(Basis, ExponentFormula) {
    for (int n : {-3, 0, 5}) {
        const cplx want(-kP.lambda - kP.alpha / 2, 2 * M_PI * n / kP.horizon_T);
        EXPECT_LT(std::abs(hjmm::lambda_value(kP, n) - want), 1e-15);
        EXPECT_EQ(hjmm::lambda_n(kP, n).index_n, n);
    }
}

TEST(Basis, ValidateRejectsBadParameters) {
    EXPECT_THROW((BasisParams{1.0, -0.5, 1.0, 4}.validate()), hjmm::InvalidArgument);
    EXPECT_THROW((BasisParams{0.0, 0.5, 1.0, 4}.validate()), hjmm::InvalidArgument);
    EXPECT_THROW((BasisParams{1.0, 0.5, 0.0, 4}.validate()), hjmm::InvalidArgument);
    EXPECT_THROW((BasisParams{1.0, 0.5, 1.0, -1}.validate()), hjmm::InvalidArgument);
    EXPECT_NO_THROW(kP.validate());
}

TEST(Basis, FrameConstants) {
    const double e = std::exp(-2 * kP.lambda * kP.horizon_T);
    EXPECT_NEAR(kP.frame_upper(), 1 / (1 - e), 1e-14);
    EXPECT_NEAR(kP.frame_lower(), e / (1 - e), 1e-14);
}

TEST(Basis, ExprelMatchesDirectFormula) {
    for (cplx z : {cplx(0.3, 2.0), cplx(-1.0, 0.0), cplx(-0.7, 31.4), cplx(1e-9, 1e-9)}) {
        for (double L : {0.1, 1.0, 2.5}) {
            const cplx zl = z * L;
            const cplx direct = std::abs(zl) < 1e-3 ? L * (1.0 + zl / 2.0 + zl * zl / 6.0 + zl * zl * zl / 24.0)
                                                    : (std::exp(zl) - 1.0) / z;
            EXPECT_LT(std::abs(hjmm::exprel(z, L) - direct), 1e-12 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST(Basis, CutIsPeriodicReduction) {
    EXPECT_DOUBLE_EQ(hjmm::cut(0.25, 1.0), 0.25);
    EXPECT_DOUBLE_EQ(hjmm::cut(3.0, 1.0), 0.0);
    EXPECT_NEAR(hjmm::cut(2.75, 1.0), 0.75, 1e-15);
    EXPECT_EQ(hjmm::period_index(2.75, 1.0), 2);
    EXPECT_EQ(hjmm::period_index(3.0, 1.0), 3);
    EXPECT_THROW(hjmm::cut(-0.1, 1.0), hjmm::InvalidArgument);
}

TEST(Basis, GnDerivativeAndValue) {
    for (int n : {-2, 0, 7}) {
        EXPECT_LT(std::abs(hjmm::eval_g_n(kP, n, 0.0)), 1e-15);
        for (double x : {0.1, 0.5, 0.9, 1.7}) {
            const double h = 1e-5;
            const cplx fd = (hjmm::eval_g_n(kP, n, x + h) - hjmm::eval_g_n(kP, n, x - h)) / (2 * h);
            EXPECT_LT(std::abs(fd - hjmm::eval_g_n_prime(kP, n, x)), 1e-6);
            const cplx integral = oracle::gauss([&](double y) { return hjmm::eval_g_n_prime(kP, n, y); }, 0, x, 16);
            EXPECT_LT(std::abs(integral - hjmm::eval_g_n(kP, n, x)), 1e-13);
        }
    }
}

TEST(Basis, DualClosedFormMatchesQuadrature) {
    const BasisParams p{0.7, 0.4, 1.5, 8};
    for (int n : {-3, 0, 4}) {
        for (double x : {0.2, 1.5, 2.3, 4.6}) {
            const auto fp = [&](double y) {
                const double r = std::fmod(y, p.horizon_T);
                const double K = (1 - std::exp(-2 * p.lambda * p.horizon_T)) / std::sqrt(p.horizon_T);
                return K * std::exp(2 * p.lambda * r) * std::exp(cplx(-p.lambda, 2 * M_PI * n / p.horizon_T) * y) *
                       std::exp(-0.5 * p.alpha * y);
            };
            // integrate period by period so the kinks sit on panel edges
            cplx want = 0.0;
            for (double a = 0.0; a < x; a += p.horizon_T) {
                const double b = std::min(x, a + p.horizon_T);
                want += oracle::gauss([&](double y) { return fp(std::min(y, std::nextafter(b, a))); }, a, b, 32);
            }
            EXPECT_LT(std::abs(want - hjmm::eval_g_n_star(p, n, x)), 1e-12);
            EXPECT_LT(std::abs(fp(x + 1e-12) - hjmm::eval_g_n_star_prime(p, n, x + 1e-12)), 1e-9);
        }
    }
}

TEST(Basis, DualDerivativeDecaysGeometricallyPerPeriod) {
    for (double r : {0.1, 0.6}) {
        const cplx a = hjmm::eval_g_n_star_prime(kP, 3, r);
        const cplx b = hjmm::eval_g_n_star_prime(kP, 3, r + kP.horizon_T);
        EXPECT_LT(std::abs(b - kP.period_decay() * a), 1e-14);
    }
}

TEST(Basis, ApplyAIsLocalizedDamping) {
    const auto f = [](double x) { return cplx(1.0 + x * x); };
    EXPECT_NEAR(hjmm::apply_A(f, kP, 1.25).real(), std::exp(-0.5 * 1.25) * (1 + 0.0625), 1e-14);
    EXPECT_NEAR(hjmm::apply_A(f, kP, 0.5).real(), std::exp(-0.25) * 1.25, 1e-14);
}

}  // namespace
