// Copyright 2026 The tlme Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tlme/scenario.hpp"

int main(int argc, char** argv) {
  namespace sc = tlme::scenario;
  CLI::App app{"Time-local master equation simulator"};
  app.require_subcommand(1);

  sc::RunRequest req;
  std::uint64_t seed = 0;
  double dt = 0.0;
  auto* run = app.add_subcommand("run", "Run a built-in scenario or a config file");
  auto* scen = run->add_option("--scenario", req.scenario, "Built-in scenario name (see 'list')");
  auto* conf = run->add_option("--config", req.config_path, "Path to a tlme.scenario/1 JSON document");
  scen->excludes(conf);
  auto* seed_opt = run->add_option("--seed", seed, "Override the random seed");
  auto* dt_opt = run->add_option("--dt", dt, "Override the time step in seconds");
  run->add_option("--out", req.out, "Data file path; metadata goes to <out>.meta.json");
  run->add_option("--format", req.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* list = app.add_subcommand("list", "List built-in scenarios");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("--config", validate_path, "Path to a config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sc::kConfigError;
  }

  if (*list) {
    for (const auto& s : sc::list_scenarios()) std::cout << s.name << "\t" << s.description << "\n";
    return sc::kOk;
  }
  if (*validate) return sc::validate(validate_path, std::cerr);

  if (*seed_opt) req.seed = seed;
  if (*dt_opt) req.dt = dt;
  return sc::run(req, std::cerr);
}
