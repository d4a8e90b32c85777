#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "symbranch/config.hpp"
#include "symbranch/experiments.hpp"
#include "symbranch/harness.hpp"

using namespace symbranch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("symbranch_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SYMBRANCH_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

// Small but complete exit-law validation.
json small_exitlaw() {
  return {{"rhos", {0.0}},
          {"starts", {{1.0, 1.0}}},
          {"samples", 2000},
          {"oracle_samples", 200},
          {"oracle_dt", 1e-3},
          {"ks_tolerance", 0.05},
          {"jump_measure", {{"rhos", {0.0}}, {"scales", {2.0}}, {"truncations", {{0.0, 0.1}}}}}};
}

}  // namespace

TEST_CASE("unknown keys are reported with their path") {
  CHECK(path_of([] {
          ConfigReader r(json{{"graph", {{"type", "torus"}, {"side", 4}, {"sid", 4}}}});
          read_graph(r.child("graph"));
          r.finish();
        }) == "$.graph.sid");
  CHECK(path_of([] {
          ConfigReader r(json{{"alpha", 1}, {"beta", 2}});
          r.number("alpha", 0);
          r.finish();
        }) == "$.beta");
}

TEST_CASE("wrong types and ranges name the key") {
  CHECK(path_of([] {
          ConfigReader r(json{{"gamma", "fast"}});
          r.number("gamma", 1.0);
        }) == "$.gamma");
  CHECK(path_of([] {
          ConfigReader r(json{{"replicas", -3}});
          r.count("replicas", 1);
        }) == "$.replicas");
  CHECK(path_of([] {
          ConfigReader r(json{{"method", "euler"}});
          r.choice("method", "trotter", {"trotter", "pdmp"});
        }) == "$.method");
  CHECK(path_of([] { run_experiment("duality-self", json{{"replicas", 10}, {"oops", 1}}); }) ==
        "$.oops");
  CHECK(path_of([] { run_experiment("no-such-experiment", json::object()); }) == "$.experiment");
  CHECK(path_of([] { run_experiment("voter-limit", json{{"experiment", "gamma-limit"}}); }) ==
        "$.experiment");
}

TEST_CASE("criterion names must be unique") {
  SummaryReport rep;
  rep.check("g", "a", 1, 1, 0, true);
  CHECK_THROWS(rep.check("g", "a", 2, 1, 0, true));
  rep.check("g", "b", 2, 1, 0.5, false);
  CHECK_FALSE(rep.passed());
  CHECK_FALSE(rep.to_json().contains("runtime_seconds"));
}

TEST_CASE("numbers are written with round-trip precision") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CsvTable t("t", {"a", "b"});
  t.add(1.5, "x");
  std::ostringstream out;
  t.write(out);
  CHECK(out.str() == "a,b\n1.5,x\n");
  CHECK_THROWS(t.add(1.0));
}

TEST_CASE("exit-law validation reruns are byte-identical") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  ExperimentOptions opts;
  opts.seed = 42;
  run_experiment_to("exitlaw-validate", small_exitlaw(), opts, a);
  opts.exec = Exec::kSerial;
  run_experiment_to("exitlaw-validate", small_exitlaw(), opts, b);
  for (const char* f : {"exitlaw-validate.json", "exitlaw-validate.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("moment curve at rho=0 recovers the exponent") {
  const json cfg = {{"rhos", {0.0}}, {"time_samples", 2000}, {"oracle_dt", 1e-3}};
  const auto r = run_experiment("moment-curve", cfg);
  bool found = false;
  for (const auto& c : r.report.criteria) {
    if (c.name.find("magnitude") != std::string::npos) {
      found = true;
      CHECK(c.observed == doctest::Approx(2.0).epsilon(0.10));
    }
  }
  CHECK(found);
}

TEST_CASE("module commands produce their tables") {
  const auto out = exitlaw_validate_command(0.0, 1.0, 1.0, 5000, 3);
  CHECK(out.pass);
  REQUIRE(out.tables.size() == 1);
  CHECK(out.tables[0].columns() == std::vector<std::string>{"axis", "magnitude"});
  CHECK(out.tables[0].size() == 5000);

  const json sbm = {{"graph", {{"type", "torus"}, {"dimension", 1}, {"side", 4}}},
                    {"replicas", 3}, {"horizon", 0.1}, {"times", {0.1}}};
  const auto s = sbm_run_command(sbm);
  REQUIRE_FALSE(s.tables.empty());
  CHECK(s.tables[0].columns() == std::vector<std::string>{"replica", "time", "site", "u", "v"});
  const auto dir = scratch("module");
  write_output(s, dir);
  CHECK(fs::exists(dir / (s.stem + ".json")));
  CHECK(fs::exists(dir / (s.tables[0].name() + ".csv")));

  json pdmp = {{"method", "pdmp"}, {"replicas", 4}, {"horizon", 0.2}, {"trunc_eps", 0.1}};
  const auto p = sbminf_run_command(pdmp);
  CHECK(p.summary.dump().find("zeroed_mass") != std::string::npos);
  pdmp["bogus"] = 1;
  CHECK_THROWS_AS(sbminf_run_command(pdmp), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  CHECK(run_cli("no-such-experiment") == 2);
  CHECK(run_cli("exitlaw validate --rho 2 --start 1,1 --out " + dir.string()) == 2);
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"replicas": 10, "unknown_key": 3})";
  }
  CHECK(run_cli("duality-self --config " + (dir / "bad.json").string() + " --out " + dir.string()) == 2);
  {
    std::ofstream cfg(dir / "strict.json");
    cfg << R"({"replicas": 200, "sigmas": 0.0})";
  }
  CHECK(run_cli("duality-self --config " + (dir / "strict.json").string() + " --out " + dir.string()) == 1);
  {
    std::ofstream cfg(dir / "ok.json");
    cfg << R"({"replicas": 200})";
  }
  CHECK(run_cli("duality-self --config " + (dir / "ok.json").string() + " --seed 3 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "duality-self.json"));
  CHECK(run_cli("exitlaw validate --rho 0 --start 1,1 --samples 2000 --seed 1 --out " + dir.string()) == 0);
}
