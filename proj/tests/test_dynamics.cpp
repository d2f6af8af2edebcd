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

#include "hjmm/dynamics.hpp"
#include "oracles.hpp"

namespace {

using hjmm::BasisParams;
using hjmm::CoeffState;
using hjmm::cplx;
using hjmm::Curve;
using hjmm::TimeGrid;

const BasisParams kP{1.0, 0.5, 1.0, 16};

double f0_value(double x) { return 1.0 + 0.2 * std::sin(3 * x) + 0.1 * x; }
cplx f0_prime(double x) { return 0.6 * std::cos(3 * x) + 0.1; }

struct Setup {
    hjmm::ModelSpec spec;
    hjmm::LevyDriver driver;
};

Setup make_setup(bool drift = false) {
    Setup s;
    s.spec.params = kP;
    s.spec.f0 = Curve::from_derivative(f0_value(0.0), f0_prime, 2.0, 4097);
    if (drift) {
        // beta(t, x) = (1 + t)(0.3 - 0.1 x)
        s.spec.beta_shape = Curve::from_derivative(0.3, [](double) { return cplx(-0.1); }, 2.0, 4097);
        s.spec.beta_scale = [](double t) { return 1.0 + t; };
    }
    s.driver.loadings = {Curve::from_derivative(0.2, [](double x) { return cplx(-0.2 * std::exp(-x)); }, 2.0, 4097),
                         Curve::from_derivative(0.0, [](double x) { return cplx(0.1 * std::cos(x)); }, 2.0, 4097)};
    s.driver.seed = 77;
    return s;
}

TEST(Dynamics, TimeGridRequiresDivisibleStep) {
    EXPECT_EQ(TimeGrid::uniform(0.5, 1.0 / 64).n_steps, 32u);
    EXPECT_THROW(TimeGrid::uniform(0.5, 0.3), hjmm::InvalidArgument);
    EXPECT_THROW(TimeGrid::uniform(0.5, 0.0), hjmm::InvalidArgument);
}

TEST(Dynamics, ZeroNoiseIsTransport) {
    const auto s = make_setup();
    const TimeGrid grid = TimeGrid::uniform(0.5, 1.0 / 64);
    const auto noise = hjmm::NoiseRecord::zeros(grid.n_steps, 2);
    const auto oracle = hjmm::oracle_mild_solution(s.spec, s.driver, grid, noise);
    const auto [sim, sv] = hjmm::simulate_fk_state(s.spec, s.driver, grid, kP.k, noise);
    const auto f0k = hjmm::lambda_k(s.spec.f0, kP);
    for (std::size_t j : {0ul, 10ul, 32ul}) {
        const double t = grid.time(j);
        const hjmm::CurveEvaluator ev(oracle.curves[j]);
        for (double x : {0.0, 0.2, 0.5}) {
            EXPECT_NEAR(ev.value(x).real(), f0_value(x + t), 1e-9);
            EXPECT_LT(std::abs(hjmm::reconstruct(sim.states[j], x) - hjmm::reconstruct(f0k, x + t)), 1e-11);
        }
        EXPECT_EQ(sv.S_k[j], sim.states[j].c_star);
    }
}

TEST(Dynamics, OracleIsLeftRiemannMildSolution) {
    const auto s = make_setup(true);
    const TimeGrid grid = TimeGrid::uniform(0.25, 1.0 / 32);
    auto noise = hjmm::NoiseRecord::zeros(grid.n_steps, 2);
    noise.at(2, 0) = 0.5;
    noise.at(5, 1) = -1.0;
    const auto path = hjmm::oracle_mild_solution(s.spec, s.driver, grid, noise);
    const double t = grid.horizon();
    const auto l0 = [](double x) { return 0.2 * std::exp(-x); };
    const auto l1 = [](double x) { return 0.1 * std::sin(x); };
    const hjmm::CurveEvaluator ev(path.curves.back());
    for (double x : {0.0, 0.3, 0.7}) {
        double want = f0_value(x + t);
        for (std::size_t j = 0; j < grid.n_steps; ++j) {
            const double sj = grid.time(j);
            want += grid.dt * (1.0 + sj) * (0.3 - 0.1 * (x + t - sj));
        }
        want += 0.5 * l0(x + t - grid.time(2)) - 1.0 * l1(x + t - grid.time(5));
        EXPECT_NEAR(ev.value(x).real(), want, 1e-9) << x;
    }
    const auto xs = hjmm::sup_grid(kP.horizon_T, t, 9);
    const auto pts = hjmm::PointOracle(s.spec, s.driver, grid, xs).values(noise);
    for (std::size_t q = 0; q < xs.size(); ++q) EXPECT_NEAR(pts[q].real(), ev.value(xs[q]).real(), 1e-9);
}

TEST(Dynamics, StateVariablesAccumulateIncrements) {
    const auto s = make_setup(true);
    const TimeGrid grid = TimeGrid::uniform(0.25, 1.0 / 64);
    const auto noise = s.driver.draw(3, grid.n_steps, grid.dt);
    const auto [sim, sv] = hjmm::simulate_fk_state(s.spec, s.driver, grid, 6, noise);
    ASSERT_EQ(sv.X.size(), grid.n_steps + 1);
    // U_n(t) = e^{lambda_n t} U_n(0) + sum_j e^{lambda_n (t - t_j)} dX_n(t_j)
    const BasisParams p = kP.with_k(6);
    const std::size_t J = grid.n_steps;
    for (int n : {-6, 0, 3}) {
        const auto q = static_cast<std::size_t>(n + 6);
        const cplx ln = hjmm::lambda_value(p, n);
        cplx want = std::exp(ln * grid.horizon()) * sv.U[0][q];
        for (std::size_t j = 0; j < J; ++j) {
            want += std::exp(ln * (grid.horizon() - grid.time(j))) * (sv.X[j + 1][q] - sv.X[j][q]);
        }
        EXPECT_LT(std::abs(sv.U[J][q] - want), 1e-12);
    }
}

TEST(Dynamics, EulerSystemIsFirstOrder) {
    const auto s = make_setup();
    const int k = 4;
    const double t_end = 0.5;
    const BasisParams p = kP.with_k(k);
    // zero noise and drift: the exact solution is e^{A t} x0
    const auto exact = hjmm::shift_coeffs(hjmm::lambda_k(s.spec.f0, p), t_end);
    std::vector<double> errs;
    for (double dt : {1.0 / 512, 1.0 / 1024, 1.0 / 2048}) {
        const TimeGrid g = TimeGrid::uniform(t_end, dt);
        const auto e = hjmm::euler_coefficient_system(s.spec, s.driver, g, k, hjmm::NoiseRecord::zeros(g.n_steps, 2));
        errs.push_back(hjmm::state_norm(e.states.back() - exact));
    }
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), 1.0, 0.1);
    EXPECT_NEAR(std::log2(errs[1] / errs[2]), 1.0, 0.1);
    EXPECT_THROW(hjmm::check_euler_stability(p, 1.0 / 256), hjmm::UnstableStep);
}

TEST(Dynamics, GeneratorMatchesDerivativeOfShift) {
    CoeffState x = CoeffState::zero(kP.with_k(3));
    x.c_star = 0.4;
    x.at(-2) = cplx(0.1, 0.2), x.at(1) = cplx(-0.3, 0.05);
    const double h = 1e-6;
    const auto fd = (1.0 / (2 * h)) * (hjmm::shift_coeffs(x, 0.2 + h) - hjmm::shift_coeffs(x, 0.2 - h));
    EXPECT_LT(hjmm::state_norm(fd - hjmm::apply_generator(hjmm::shift_coeffs(x, 0.2))), 1e-8);
}

TEST(Dynamics, DeliveryForwardMatchesQuadrature) {
    const auto s = make_setup();
    const auto x = hjmm::lambda_k(s.spec.f0, kP);
    const double t = 0.1, T1 = 0.3, T2 = 0.8;
    const cplx avg =
        oracle::gauss([&](double u) { return hjmm::reconstruct(x, u - t); }, T1, T2, 32) / (T2 - T1);
    EXPECT_LT(std::abs(hjmm::delivery_forward(x, t, T1, T2) - avg), 1e-12);
    // tiny window reduces to the instantaneous forward
    EXPECT_LT(std::abs(hjmm::delivery_forward(x, t, 0.5, 0.5 + 1e-9) - hjmm::reconstruct(x, 0.4)), 1e-7);
    EXPECT_THROW(hjmm::delivery_forward(x, 0.5, 0.4, 0.8), hjmm::BadWindow);
    EXPECT_THROW(hjmm::delivery_forward(x, 0.1, 0.6, 0.4), hjmm::BadWindow);
    EXPECT_THROW(hjmm::delivery_forward(x, 0.1, 0.6, 1.4), hjmm::BadWindow);
}

TEST(Dynamics, ConvergenceErrorsBelowBoundAndDecreasing) {
    const auto s = make_setup(true);
    hjmm::ConvergenceSettings cfg;
    cfg.t_eval = 0.25;
    cfg.dt = 1.0 / 64;
    cfg.k_list = {4, 8, 16};
    cfg.n_paths = 100;
    cfg.sup_points = 256;
    const auto rep = hjmm::convergence_experiment(s.spec, s.driver, cfg);
    ASSERT_EQ(rep.rows.size(), 3u);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        EXPECT_LE(rep.rows[i].mc_error, rep.rows[i].bound);
        if (i > 0) {
            EXPECT_LT(rep.rows[i].mc_error, rep.rows[i - 1].mc_error);
        }
    }
    EXPECT_GT(rep.rate.mean_C1, 0.0);
}

TEST(Dynamics, FixedMaturityPricesAreMartingales) {
    const auto s = make_setup();
    const TimeGrid grid = TimeGrid::uniform(0.5, 1.0 / 32);
    const auto rep = hjmm::martingale_check(s.spec, s.driver, grid, 8, 0.75, 4000);
    EXPECT_LE(std::abs(rep.total_mean), 3.0 * rep.total_stderr);
    EXPECT_GT(rep.total_stderr, 0.0);
    EXPECT_THROW(hjmm::martingale_check(s.spec, s.driver, grid, 8, 0.25, 10), hjmm::InvalidArgument);
}

TEST(Dynamics, SpecRejectsMismatchedGrids) {
    auto s = make_setup();
    s.driver.loadings[1] = Curve::from_derivative(0.0, [](double) { return cplx(0.0); }, 2.0, 1025);
    EXPECT_THROW(s.spec.validate(s.driver), hjmm::GridMismatch);
}

}  // namespace
