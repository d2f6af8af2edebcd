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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hjmm/cli_commands.hpp"

namespace {

namespace fs = std::filesystem;
using hjmm::ConfigError;
using hjmm::cplx;

nlohmann::json small_config() {
    return nlohmann::json::parse(R"({
        "params": {"alpha": 1.0, "lambda": 0.5, "T": 1.0, "k": 8},
        "grid_points": 1025,
        "k_list": [4, 8, 16],
        "n_paths": 50,
        "time_step": 0.0078125,
        "t_eval": 0.25,
        "seed": 11,
        "markovian": {"n_paths": 2, "time_step": 0.03125},
        "scenario_paths": 2,
        "delivery_windows": [[0.25, 0.5], [0.3, 1.0]]
    })");
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hjmm_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HJMM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, DefaultsAndParsing) {
    const auto c = hjmm::parse_config(small_config());
    EXPECT_EQ(c.params.k, 8);
    EXPECT_EQ(c.grid_points, 1025u);
    EXPECT_EQ(c.delivery_windows.size(), 2u);
    EXPECT_EQ(c.driver.law, "gaussian");
    const auto d = hjmm::parse_config(nlohmann::json::object());
    EXPECT_EQ(d.k_list, (std::vector<int>{4, 8, 16, 32, 64}));
}

TEST(Config, EveryViolationIsANamedError) {
    const struct {
        const char* pointer;
        nlohmann::json value;
        const char* needle;
    } cases[] = {
        {"/params/lambda", -0.5, "params.lambda"},
        {"/params/alpha", 0.0, "params.alpha"},
        {"/k_list", nlohmann::json::array({8, 4}), "ascending"},
        {"/n_paths", 0, "n_paths"},
        {"/time_step", 0.1, "time_step"},
        {"/t_eval", 2.0, "t_eval"},
        {"/grid_points", 1024, "grid_points"},
        {"/driver", nlohmann::json{{"law", "cauchy"}}, "driver.law"},
        {"/delivery_windows", nlohmann::json::array({nlohmann::json::array({0.5, 0.4})}), "delivery_windows"},
        {"/params/k", "eight", "params.k"},
    };
    for (const auto& c : cases) {
        auto j = small_config();
        j[nlohmann::json::json_pointer(c.pointer)] = c.value;
        try {
            hjmm::parse_config(j);
            ADD_FAILURE() << c.pointer << " accepted";
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(c.needle), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(hjmm::parse_config(nlohmann::json::array()), ConfigError);
}

TEST(Config, BuiltinCurvesMatchClosedForms) {
    const auto check = [](const std::string& text, auto value) {
        const auto c = hjmm::resolve_curve(text, 2.0, 2049);
        const hjmm::CurveEvaluator ev(c);
        for (double x : {0.0, 0.37, 1.2, 2.0}) EXPECT_NEAR(ev.value(x).real(), value(x), 1e-10) << text << ' ' << x;
    };
    check("const(1.5)", [](double) { return 1.5; });
    check("linear(0.1,-0.05)", [](double x) { return 0.1 - 0.05 * x; });
    check("exp(0.2,1.0)", [](double x) { return 0.2 * std::exp(-x); });
    check("hump(0.15,0.3,0.25)", [](double x) { return 0.15 * std::exp(-std::pow((x - 0.3) / 0.25, 2)); });
    check("bump", [](double x) { return 1.0 + 0.25 * x + 0.3 * std::exp(-std::pow((x - 0.45) / 0.12, 2)); });
    EXPECT_THROW(hjmm::resolve_curve("no_such_curve", 2.0, 2049), ConfigError);
    EXPECT_THROW(hjmm::resolve_curve("const(1,2)", 2.0, 2049), ConfigError);
}

TEST(Config, ShippedBumpFileMatchesBuiltin) {
    const auto file = hjmm::resolve_curve("bump.csv", 2.0, 4097, HJMM_DATA_DIR);
    const auto builtin = hjmm::resolve_curve("bump", 2.0, 4097);
    EXPECT_LT(hjmm::norm_alpha(file - builtin, 1.0), 1e-6);
    const auto cfg = hjmm::load_config(fs::path(HJMM_CONFIG_DIR) / "default.json");
    EXPECT_NO_THROW(hjmm::build_setup(cfg));
}

TEST(Cli, TruncationOfGStarVanishes) {
    auto j = small_config();
    j["model"]["f0"] = "const(1.0)";
    const auto out = scratch("gstar");
    std::ostringstream log;
    EXPECT_EQ(hjmm::cli::cmd_truncation_rate(hjmm::parse_config(j), out, log), hjmm::cli::ok);
    std::ifstream is(out / "truncation_rate.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "k,error_sq,C1_over_k");
    while (std::getline(is, line)) EXPECT_NE(line.find(",0,0"), std::string::npos) << line;
}

TEST(Cli, BasisCheckAtKZero) {
    auto j = small_config();
    j["params"]["k"] = 0;
    std::ostringstream log;
    EXPECT_EQ(hjmm::cli::cmd_basis_check(hjmm::parse_config(j), scratch("k0"), log), hjmm::cli::ok) << log.str();
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("exit");
    std::ofstream(dir / "bad.json") << R"({"params": {"lambda": -0.5}})";
    std::ofstream(dir / "broken.json") << "{ not json";
    auto unstable = small_config();
    unstable["model"]["f0"] = "kinked.csv";
    std::ofstream(dir / "ok.json") << small_config().dump();
    EXPECT_EQ(run_cli("basis-check --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
    EXPECT_EQ(run_cli("basis-check --config " + (dir / "broken.json").string() + " --out " + dir.string()), 2);
    EXPECT_EQ(run_cli("no-such-command"), 2);
    EXPECT_EQ(run_cli("basis-check --config " + (dir / "ok.json").string() + " --out " + dir.string()), 0);
    // a derivative jump makes C1 undefined: numerical failure
    {
        const auto c = hjmm::Curve::from_derivative(1.0, [](double x) { return cplx(x < 0.5 ? 0.0 : 1.0); }, 2.0, 1025);
        hjmm::write_curve_csv((dir / "kinked.csv").string(), c);
        std::ofstream(dir / "kinked.json") << unstable.dump();
    }
    EXPECT_EQ(run_cli("truncation-rate --config " + (dir / "kinked.json").string() + " --out " + dir.string()), 3);
}

TEST(Cli, SimulateIsDeterministicAndPricesWindows) {
    const auto a = scratch("sim_a"), b = scratch("sim_b");
    const auto cfg = hjmm::parse_config(small_config());
    std::ostringstream log;
    ASSERT_EQ(hjmm::cli::cmd_simulate(cfg, a, log), 0);
    ASSERT_EQ(hjmm::cli::cmd_simulate(cfg, b, log), 0);
    for (const char* f : {"scenario.csv", "oracle.csv", "delivery.csv", "coefficients.json"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
        EXPECT_GT(slurp(a / f).size(), 20u) << f;
    }
    // windows priced from the written final state agree with quadrature of its reconstruction
    const auto slices = nlohmann::json::parse(slurp(a / "coefficients.json"));
    const auto last = hjmm::coeff_state_from_json(slices.at(slices.size() / 2 - 1).at("state"));
    const double T1 = 0.3, T2 = 1.0, t = 0.25;
    cplx avg = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const double u = T1 + (T2 - T1) * (i + 0.5) / n;
        avg += hjmm::reconstruct(last, u - t);
    }
    avg /= static_cast<double>(n);
    EXPECT_NEAR(hjmm::delivery_forward(last, t, T1, T2).real(), avg.real(), 1e-6);
}

TEST(Cli, ZeroNoiseScenarioIsTransport) {
    auto j = small_config();
    j["scenario_paths"] = 1;
    j["driver"]["loadings"] = nlohmann::json::array({"zero"});
    const auto out = scratch("transport");
    std::ostringstream log;
    ASSERT_EQ(hjmm::cli::cmd_simulate(hjmm::parse_config(j), out, log), 0);
    std::ifstream is(out / "oracle.csv");
    std::string line;
    std::getline(is, line);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        double path, t, x, f;
        char c;
        std::istringstream ls(line);
        ls >> path >> c >> t >> c >> x >> c >> f;
        EXPECT_NEAR(f, hjmm::bump_value(x + t), 1e-7);
        ++rows;
    }
    EXPECT_GT(rows, 100u);
}

TEST(Cli, ConvergeWritesTableAndStderrScales) {
    const auto out = scratch("conv");
    std::ostringstream log;
    const auto cfg = hjmm::parse_config(small_config());
    EXPECT_EQ(hjmm::cli::cmd_converge(cfg, false, out, log), 0) << log.str();
    std::ifstream is(out / "converge.csv");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "k,mc_error,stderr,bound");
    EXPECT_TRUE(fs::exists(out / "converge.svg"));

    const auto setup = hjmm::build_setup(cfg);
    hjmm::ConvergenceSettings cs;
    cs.t_eval = 0.25, cs.dt = cfg.time_step, cs.k_list = {8}, cs.sup_points = 128;
    cs.n_paths = 400;
    const double se1 = hjmm::convergence_experiment(setup.spec, setup.driver, cs).rows[0].stderr_;
    cs.n_paths = 1600;
    const double se4 = hjmm::convergence_experiment(setup.spec, setup.driver, cs).rows[0].stderr_;
    EXPECT_NEAR(se4 / se1, 0.5, 0.1);
}

TEST(Cli, MarkovianConverge) {
    const auto out = scratch("conv_markov");
    std::ostringstream log;
    EXPECT_EQ(hjmm::cli::cmd_converge(hjmm::parse_config(small_config()), true, out, log), 0) << log.str();
    EXPECT_TRUE(fs::exists(out / "converge_markovian.csv"));
}

}  // namespace
