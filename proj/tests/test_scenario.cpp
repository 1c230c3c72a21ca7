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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <doctest.h>

#include "tlme/errors.hpp"
#include "tlme/scenario.hpp"

using namespace tlme;
using namespace tlme::scenario;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tlme_scenario_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const Json& doc) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

int run_builtin(const std::string& name, const fs::path& out, std::string* log = nullptr,
                std::optional<std::uint64_t> seed = {}, const std::string& format = "") {
  RunRequest req;
  req.scenario = name;
  req.out = out.string();
  req.seed = seed;
  req.format = format;
  std::ostringstream os;
  const int code = run(req, os);
  if (log) *log = os.str();
  return code;
}

int run_config(const Json& doc, const fs::path& out, std::string* log = nullptr) {
  RunRequest req;
  req.config_path = write_config(out.filename().string() + ".config.json", doc).string();
  req.out = out.string();
  std::ostringstream os;
  const int code = run(req, os);
  if (log) *log = os.str();
  return code;
}

Json two_level_doc(const std::string& engine, double rate) {
  return Json{{"schema", kSchema},
              {"name", "decay"},
              {"engine", engine},
              {"system",
               {{"dimension", 2},
                {"channels", Json::array({{{"label", "decay"},
                                           {"operator", "sigma_minus"},
                                           {"rate", {{"type", "constant"}, {"value", rate}}}}})}}},
              {"initial", {{"basis", 0}}},
              {"t_end", 2.0},
              {"dt", 1e-3},
              {"stride", 500},
              {"N", 400}};
}

Json ring_doc(const std::string& engine) {
  Json doc{{"schema", kSchema},
           {"engine", engine},
           {"system", {{"preset", "ring"}, {"variant", "c"}, {"gamma", 0.5}}},
           {"t_end", 4.0},
           {"dt", engine == "classical-ode" ? 1e-3 : 1e-4},
           {"stride", 1000}};
  if (engine == "classical-ode") {
    doc["initial"] = {{"p", {1.0, 0.0, 0.0, 0.0}}};
  } else {
    doc["initial"] = {{"counts", {1000, 0, 0, 0}}};
    doc["N"] = 1000;
  }
  return doc;
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

}  // namespace

TEST_CASE("built-in scenarios are listed") {
  std::set<std::string> names;
  for (const auto& s : list_scenarios()) {
    names.insert(s.name);
    CHECK_FALSE(s.description.empty());
  }
  for (const char* n : {"fig1", "fig3", "fig4", "fig5", "two_level_q", "cp_demo", "mcwf_decay"}) {
    CHECK(names.count(n) == 1);
  }
  CHECK_THROWS_AS(builtin_config("nope"), ConfigError);
}

TEST_CASE("every built-in scenario runs and writes metadata") {
  for (const auto& s : list_scenarios()) {
    const fs::path out = scratch() / (s.name + ".csv");
    std::string log;
    INFO(s.name << ": " << log);
    REQUIRE(run_builtin(s.name, out, &log) == kOk);
    const std::string data = slurp(out);
    CHECK(data.find('\n') != std::string::npos);
    CHECK(data.rfind("t,", 0) == 0);
    const Json meta = read_json(out.string() + ".meta.json");
    for (const char* key : {"version", "schema", "name", "engine", "config_hash", "seed", "dt", "N", "t_end",
                            "stride", "wall_clock_seconds", "max_step_probability", "warnings", "diagnostics",
                            "config"}) {
      CHECK(meta.contains(key));
    }
    CHECK(meta["version"] == kVersion);
    CHECK(meta["seed"] == kDefaultSeed);
    CHECK(meta["config_hash"].get<std::string>().size() == 16);
  }
}

TEST_CASE("invalid dt is a config error naming the field") {
  RunRequest req;
  req.scenario = "fig1";
  req.dt = 0.0;
  req.out = (scratch() / "bad.csv").string();
  std::ostringstream log;
  CHECK(run(req, log) == kConfigError);
  CHECK(log.str().find("dt") != std::string::npos);
  CHECK_FALSE(fs::exists(scratch() / "bad.csv"));
}

TEST_CASE("config errors name the offending field") {
  Json doc = two_level_doc("ode", 0.4);
  doc.erase("t_end");
  std::string log;
  CHECK(run_config(doc, scratch() / "missing.csv", &log) == kConfigError);
  CHECK(log.find("t_end") != std::string::npos);
  doc = two_level_doc("warp", 0.4);
  CHECK(run_config(doc, scratch() / "engine.csv", &log) == kConfigError);
  CHECK(log.find("engine") != std::string::npos);
  doc = two_level_doc("ode", 0.4);
  doc["schema"] = "other/1";
  CHECK(run_config(doc, scratch() / "schema.csv", &log) == kConfigError);
  CHECK(log.find("schema") != std::string::npos);
  doc = two_level_doc("mcwf", 0.4);
  doc["N"] = 0;
  CHECK(run_config(doc, scratch() / "n.csv", &log) == kConfigError);
  CHECK(log.find("N") != std::string::npos);
}

TEST_CASE("stochastic runs are byte-reproducible") {
  for (const char* name : {"mcwf_decay", "two_level_q"}) {
    const fs::path a = scratch() / (std::string(name) + "_a.csv");
    const fs::path b = scratch() / (std::string(name) + "_b.csv");
    const fs::path c = scratch() / (std::string(name) + "_c.csv");
    REQUIRE(run_builtin(name, a) == kOk);
    REQUIRE(run_builtin(name, b) == kOk);
    REQUIRE(run_builtin(name, c, nullptr, 777) == kOk);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    Json ma = read_json(a.string() + ".meta.json");
    Json mb = read_json(b.string() + ".meta.json");
    CHECK(ma["config_hash"] == mb["config_hash"]);
    CHECK(read_json(c.string() + ".meta.json")["seed"] == 777);
    CHECK(read_json(c.string() + ".meta.json")["config_hash"] != ma["config_hash"]);
  }
}

TEST_CASE("JSON output format") {
  const fs::path out = scratch() / "fig1.json";
  REQUIRE(run_builtin("fig1", out, nullptr, {}, "json") == kOk);
  const Json j = read_json(out);
  CHECK(j["columns"] == Json({"t", "variant", "p1_init", "p1", "eff_rate"}));
  CHECK(j["rows"].size() > 10);
  CHECK(j["rows"][0].size() == 5);
  const fs::path csv = scratch() / "fig1_cmp.csv";
  REQUIRE(run_builtin("fig1", csv) == kOk);
  std::istringstream lines(slurp(csv));
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,variant,p1_init,p1,eff_rate");
  std::size_t count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  CHECK(count == j["rows"].size());
}

TEST_CASE("config hash is FNV-1a of the canonical document") {
  const Json doc = Json::parse(R"({"b": [1, 2], "a": {"y": true, "x": "s"}})");
  const std::string canonical = R"({"a":{"x":"s","y":true},"b":[1,2]})";
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  CHECK(config_hash(doc) == h);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  Json with_path = doc;
  with_path["output"] = {{"path", "/somewhere/else.csv"}};
  CHECK(config_hash(with_path) == config_hash(doc));
  with_path["output"]["format"] = "json";
  CHECK(config_hash(with_path) != config_hash(doc));
}

TEST_CASE("I/O failures exit with code 4") {
  std::string log;
  CHECK(run_builtin("fig1", "/nonexistent-dir/x/out.csv", &log) == kIoError);
  RunRequest req;
  req.config_path = (scratch() / "does_not_exist.json").string();
  std::ostringstream os;
  CHECK(run(req, os) == kIoError);
  std::ostringstream vs;
  CHECK(validate(req.config_path, vs) == kIoError);
}

TEST_CASE("numerical failures exit with code 3") {
  std::string log;
  CHECK(run_config(two_level_doc("mcwf", -0.4), scratch() / "neg.csv", &log) == kNumericalError);
  CHECK(log.find("non-Markovian") != std::string::npos);
  Json coarse = two_level_doc("mcwf", 1.0);
  coarse["dt"] = 0.5;
  CHECK(run_config(coarse, scratch() / "coarse.csv", &log) == kNumericalError);
}

TEST_CASE("engine runs produce their documented columns") {
  struct Case {
    Json doc;
    std::string header;
  };
  Json cp = two_level_doc("cp-audit", 0.4);
  cp.erase("initial");
  const std::vector<Case> cases{
      {two_level_doc("ode", 0.4), "t,row,col,re,im"},
      {two_level_doc("nmqj", 0.4), "t,row,col,re,im"},
      {two_level_doc("mcwf", 0.4), "t,row,col,re,im,se_re,se_im"},
      {ring_doc("classical-ode"), "t,state,p"},
      {ring_doc("classical-ensemble"), "t,state,count,fraction"},
      {cp, "t,rate_integral_min,min_eigenvalue,is_cp"},
  };
  int k = 0;
  for (const auto& c : cases) {
    const fs::path out = scratch() / ("engine" + std::to_string(k++) + ".csv");
    std::string log;
    REQUIRE_MESSAGE(run_config(c.doc, out, &log) == kOk, log);
    std::istringstream lines(slurp(out));
    std::string header;
    std::getline(lines, header);
    CHECK(header == c.header);
  }
}

TEST_CASE("ode engine output matches the closed form") {
  const fs::path out = scratch() / "ode_values.json";
  Json doc = two_level_doc("ode", 0.4);
  doc["output"] = {{"format", "json"}};
  REQUIRE(run_config(doc, out) == kOk);
  const Json j = read_json(out);
  int checked = 0;
  for (const auto& row : j["rows"]) {
    if (row[1] == 0 && row[2] == 0) {
      CHECK(row[3].get<double>() == doctest::Approx(std::exp(-0.4 * row[0].get<double>())).epsilon(1e-9));
      ++checked;
    }
  }
  CHECK(checked == 5);
}

TEST_CASE("validate accepts good configs and rejects bad ones") {
  std::ostringstream ok;
  CHECK(validate(write_config("good.json", two_level_doc("ode", 0.4)).string(), ok) == kOk);
  CHECK(ok.str().find("ok") != std::string::npos);
  Json bad = two_level_doc("ode", 0.4);
  bad["system"]["channels"][0]["rate"] = {{"type", "mystery"}};
  std::ostringstream err;
  CHECK(validate(write_config("bad.json", bad).string(), err) == kConfigError);
  CHECK(err.str().find("system.channels[0].rate") != std::string::npos);
  {
    std::ofstream(scratch() / "garbage.json") << "{ not json";
  }
  std::ostringstream g;
  CHECK(validate((scratch() / "garbage.json").string(), g) == kConfigError);
}
