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

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hjmm/cli_commands.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_dir,
        const std::function<int(const hjmm::ExperimentConfig&, const std::filesystem::path&)>& body) {
    return hjmm::cli::guarded(
        [&] {
            const auto cfg = hjmm::load_config(config_path);
            std::filesystem::create_directories(out_dir);
            return body(cfg, out_dir);
        },
        std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-rank forward-curve approximation toolkit"};
    app.require_subcommand(1);

    std::string config, out = ".";
    bool markovian = false;
    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        return sub;
    };
    auto* basis = add("basis-check", "biorthogonality, frame bounds, commutator and norm invariants");
    auto* trunc = add("truncation-rate", "truncation error of the initial curve against C1/k");
    auto* sim = add("simulate", "scenario paths of the finite-rank model and the oracle");
    auto* conv = add("converge", "Monte-Carlo convergence in k");
    conv->add_flag("--markovian", markovian, "use the state-dependent coefficient field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hjmm::cli::config_error;
    }

    using hjmm::ExperimentConfig;
    using Path = std::filesystem::path;
    if (basis->parsed()) {
        return run(config, out, [](const ExperimentConfig& c, const Path& o) {
            return hjmm::cli::cmd_basis_check(c, o, std::cout);
        });
    }
    if (trunc->parsed()) {
        return run(config, out, [](const ExperimentConfig& c, const Path& o) {
            return hjmm::cli::cmd_truncation_rate(c, o, std::cout);
        });
    }
    if (sim->parsed()) {
        return run(config, out, [](const ExperimentConfig& c, const Path& o) {
            return hjmm::cli::cmd_simulate(c, o, std::cout);
        });
    }
    return run(config, out, [markovian](const ExperimentConfig& c, const Path& o) {
        return hjmm::cli::cmd_converge(c, markovian, o, std::cout);
    });
}
