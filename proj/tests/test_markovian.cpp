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

#include "hjmm/markovian.hpp"

namespace {

using hjmm::BasisParams;
using hjmm::cplx;
using hjmm::Curve;
using hjmm::TimeGrid;

const BasisParams kP{1.0, 0.5, 1.0, 8};

struct Setup {
    hjmm::ModelSpec spec;
    hjmm::LevyDriver driver;
};

Curve constant(double c, std::size_t points = 2049) {
    return Curve::from_derivative(c, [](double) { return cplx(0.0); }, 2.0, points);
}

Setup make_setup(std::size_t points = 2049) {
    Setup s;
    s.spec.params = kP;
    s.spec.f0 = Curve::from_derivative(1.0, [](double x) { return cplx(0.3 * std::cos(2 * x)); }, 2.0, points);
    s.driver.loadings = {Curve::from_derivative(0.2, [](double x) { return cplx(-0.2 * std::exp(-x)); }, 2.0, points),
                         Curve::from_derivative(0.0, [](double x) { return cplx(0.1 * std::cos(x)); }, 2.0, points)};
    s.driver.seed = 5;
    return s;
}

TEST(Markovian, FieldSpecParsing) {
    const auto fs = hjmm::parse_field_spec(" mean_revert( 1.5 , hump(0.1,0.3,0.2) ) ");
    EXPECT_EQ(fs.name, "mean_revert");
    ASSERT_EQ(fs.args.size(), 2u);
    EXPECT_EQ(fs.args[1], "hump(0.1,0.3,0.2)");
    EXPECT_TRUE(hjmm::parse_field_spec("zero").args.empty());
    EXPECT_THROW(hjmm::parse_field_spec("mean_revert(1.0"), hjmm::InvalidArgument);
    const auto s = make_setup();
    const auto times = TimeGrid::uniform(1.0, 1.0 / 64);
    const auto resolve = [](const std::string&) { return constant(1.0); };
    EXPECT_THROW(hjmm::make_drift_field("quadratic(1)", s.spec, times, resolve), hjmm::InvalidArgument);
    EXPECT_THROW(hjmm::make_vol_field("proportional_vol()", s.spec, s.driver, times), hjmm::InvalidArgument);
    EXPECT_THROW(hjmm::make_drift_field("mean_revert(x,y)", s.spec, times, resolve), hjmm::InvalidArgument);
}

TEST(Markovian, MeanRevertOnConstantsIsEulerOde) {
    auto s = make_setup();
    s.spec.f0 = constant(2.0);
    const double kappa = 1.5, theta = 0.5;
    const auto cf = hjmm::fields::mean_revert(kappa, constant(theta), kP);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1.0 / 256);
    const auto noise = hjmm::NoiseRecord::zeros(grid.n_steps, 0);
    const auto truth = hjmm::markovian_oracle(cf, s.spec, grid, noise);
    const auto approx = hjmm::simulate_markovian_fk(cf, s.spec, grid, 4, noise);
    for (std::size_t j : {64ul, 256ul}) {
        const double t = grid.time(j);
        const double euler = theta + (2.0 - theta) * std::pow(1 - kappa * grid.dt, static_cast<double>(j));
        const double exact = theta + (2.0 - theta) * std::exp(-kappa * t);
        EXPECT_NEAR(truth.curves[j].value_at_zero.real(), euler, 1e-12);
        EXPECT_NEAR(hjmm::reconstruct(approx.states[j], 0.0).real(), euler, 1e-12);
        EXPECT_NEAR(euler, exact, 2.0 * kappa * kappa * grid.dt * t);
    }
}

TEST(Markovian, AuditsPassForRegistryFields) {
    const auto s = make_setup();
    const auto cf = hjmm::fields::combine(hjmm::fields::mean_revert(1.0, s.spec.f0, kP),
                                          hjmm::fields::proportional_vol(0.3, s.driver, kP));
    const auto rep = hjmm::audit_contracts(cf, s.spec, 60, 1);
    EXPECT_TRUE(rep.ok());
    EXPECT_EQ(rep.structure_max_diff, 0.0);
    EXPECT_GT(rep.worst_lipschitz_b, 0.5);
    EXPECT_LE(rep.worst_lipschitz_psi, cf.lipschitz_psi);
}

TEST(Markovian, AuditsCatchBrokenContracts) {
    const auto s = make_setup();
    auto understated = hjmm::fields::mean_revert(1.0, s.spec.f0, kP);
    understated.lipschitz_b = 0.1;
    EXPECT_THROW(hjmm::audit_contracts(understated, s.spec, 20, 2), hjmm::ContractViolation);

    hjmm::CoefficientField lookahead;
    lookahead.name = "lookahead";
    lookahead.b = [](double, const Curve& f) { return -1.0 * f; };
    lookahead.lipschitz_b = 1.0;
    const auto rep = hjmm::audit_contracts(lookahead, s.spec, 20, 3, false);
    EXPECT_FALSE(rep.ok());
    EXPECT_GT(rep.structure_max_diff, 0.0);
}

TEST(Markovian, PicardResidualsDecayGeometrically) {
    const auto s = make_setup();
    const auto cf = hjmm::fields::combine(hjmm::fields::mean_revert(1.0, s.spec.f0, kP),
                                          hjmm::fields::proportional_vol(0.3, s.driver, kP));
    const TimeGrid grid = TimeGrid::uniform(1.0, 1.0 / 32);
    const auto noise = s.driver.draw(0, grid.n_steps, grid.dt);
    const auto log = hjmm::picard_iterate(cf, s.spec, grid, noise, 10);
    for (std::size_t m = 3; m < log.residuals.size(); ++m) {
        EXPECT_LT(log.residuals[m], 0.6 * log.residuals[m - 1]) << m;
    }
    const auto truth = hjmm::markovian_oracle(cf, s.spec, grid, noise);
    EXPECT_LT(hjmm::path_sup_distance(log.iterate, truth.curves, grid, kP.horizon_T), 1e3 * log.residuals.back());
}

TEST(Markovian, ProjectedFieldConstants) {
    const auto s = make_setup();
    const auto cf = hjmm::fields::mean_revert(2.0, s.spec.f0, kP);
    const auto pf = hjmm::projected_coefficients(cf, 4, kP);
    const double bound = std::exp(kP.lambda * kP.horizon_T) / std::sqrt(1 - std::exp(-2 * kP.lambda * kP.horizon_T));
    EXPECT_NEAR(pf.projection_bound(), bound, 1e-14);
    EXPECT_NEAR(pf.as_field().lipschitz_b, cf.lipschitz_b * bound, 1e-12);
    EXPECT_EQ(pf.b_bar(0.0, s.spec.f0)->k(), 4);
}

TEST(Markovian, ConvergenceInK) {
    const auto s = make_setup();
    const auto cf = hjmm::fields::combine(hjmm::fields::mean_revert(1.0, s.spec.f0, kP),
                                          hjmm::fields::proportional_vol(0.3, s.driver, kP));
    hjmm::MarkovSettings ms;
    ms.dt = 1.0 / 32;
    ms.t_end = 0.5;
    ms.k_list = {4, 8, 16};
    ms.n_paths = 4;
    const auto rows = hjmm::markovian_convergence_experiment(cf, s.spec, s.driver, ms);
    EXPECT_LT(rows[1].mc_error, rows[0].mc_error);
    EXPECT_LT(rows[2].mc_error, rows[1].mc_error);
}

TEST(Markovian, ExplicitEulerStabilityAndAgreement) {
    const auto s = make_setup();
    const auto cf = hjmm::fields::mean_revert(1.0, s.spec.f0, kP);
    const TimeGrid grid = TimeGrid::uniform(0.5, 1.0 / 512);
    const auto noise = hjmm::NoiseRecord::zeros(grid.n_steps, 0);
    const auto a = hjmm::simulate_markovian_fk(cf, s.spec, grid, 4, noise, hjmm::MarkovScheme::explicit_euler);
    const auto b = hjmm::simulate_markovian_fk(cf, s.spec, grid, 4, noise);
    EXPECT_LT(hjmm::state_norm(a.states.back() - b.states.back()), 0.05);
    EXPECT_THROW(hjmm::simulate_markovian_fk(cf, s.spec, TimeGrid::uniform(0.5, 1.0 / 8), 16, noise,
                                             hjmm::MarkovScheme::explicit_euler),
                 hjmm::UnstableStep);
}

}  // namespace
