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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace tlme::scenario {

inline constexpr const char* kSchema = "tlme.scenario/1";
inline constexpr const char* kVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 12345;

using Json = nlohmann::json;
using Cell = std::variant<double, std::int64_t, std::string>;

/// Long-format table: one row per (t, series) pair, time first.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ScenarioConfig {
  std::string name;
  /// Either a built-in scenario name or empty for a plain engine run.
  std::string scenario;
  std::string engine;
  Json system;
  Json initial;
  Json params;
  double t_end = 0.0;
  double dt = 0.0;
  std::size_t stride = 1;
  std::int64_t n = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string format = "csv";
  std::string output_path;
  /// The validated document, with overrides applied; the config hash is
  /// taken over its canonical dump.
  Json document;
};

struct RunOutcome {
  Table table;
  double max_step_probability = 0.0;
  std::vector<std::string> warnings;
  Json diagnostics = Json::object();
};

struct ScenarioInfo {
  std::string name;
  std::string description;
};

std::vector<ScenarioInfo> list_scenarios();
/// Full configuration document of a built-in scenario; throws ConfigError
/// for unknown names.
Json builtin_config(const std::string& name);

/// Checks the schema and every field; throws ConfigError naming the field.
ScenarioConfig parse_config(const Json& doc);
Json load_config_file(const std::string& path);

RunOutcome execute(const ScenarioConfig& config);

std::string to_csv(const Table& table);
std::string to_json(const Table& table);
/// 64-bit FNV-1a of the canonical (key-sorted, compact) dump, ignoring
/// output.path.
std::uint64_t config_hash(const Json& doc);
std::string hex64(std::uint64_t v);

struct RunRequest {
  std::string scenario;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::string out;
  std::string format;
};

/// Exit codes of the runner.
enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

/// Resolves, runs and writes the data file plus <out>.meta.json.
/// Diagnostics go to `log`.
int run(const RunRequest& request, std::ostream& log);
int validate(const std::string& config_path, std::ostream& log);

}  // namespace tlme::scenario
