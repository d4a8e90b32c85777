// Runs every experiment, folds the criteria into the twelve acceptance checks
// and prints one PASS/FAIL line per check.
//
//   symbranch_acceptance --out DIR            run everything, exit 1 on any FAIL
//   symbranch_acceptance --out DIR --record   run everything, exit 0 unless it crashed
//   symbranch_acceptance --out DIR --check G  report check G from a recorded run

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "symbranch/config.hpp"
#include "symbranch/experiments.hpp"
#include "symbranch/harness.hpp"

namespace {

using namespace symbranch;
using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kChecks = {
    "critical-exponent", "exit-normalization", "exit-sampler",  "tail-moments",
    "jump-measure",      "mass-martingale",    "moment-duality", "self-duality",
    "gamma-limit",       "sbm-infinite",       "voter-identification", "reproducibility"};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> mismatched_files(const fs::path& a, const fs::path& b) {
  std::vector<std::string> bad;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto other = b / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      bad.push_back(entry.path().filename().string());
    }
  }
  for (const auto& entry : fs::directory_iterator(b)) {
    if (!fs::exists(a / entry.path().filename())) bad.push_back(entry.path().filename().string());
  }
  return bad;
}

json criterion_json(const Criterion& c) {
  return {{"experiment", ""},   {"name", c.name},           {"observed", c.observed},
          {"target", c.target}, {"tolerance", c.tolerance}, {"pass", c.pass}};
}

void print_line(const std::string& check, const json& entry) {
  const bool pass = entry.at("pass").get<bool>();
  std::size_t passed = 0;
  for (const auto& c : entry.at("criteria")) passed += c.at("pass").get<bool>();
  std::cout << (pass ? "PASS " : "FAIL ") << std::left << std::setw(22) << check << std::right
            << passed << "/" << entry.at("criteria").size() << " criteria, "
            << std::fixed << std::setprecision(1) << entry.at("seconds").get<double>() << " s"
            << std::defaultfloat << '\n';
  for (const auto& c : entry.at("criteria")) {
    if (c.at("pass").get<bool>()) continue;
    std::cout << "     failed " << c.at("experiment").get<std::string>() << ": "
              << c.at("name").get<std::string>() << " observed=" << c.at("observed").dump()
              << " target=" << c.at("target").dump() << " tol=" << c.at("tolerance").dump() << '\n';
  }
}

json run_suite(const fs::path& out, std::uint64_t seed) {
  json checks = json::object();
  for (const auto& name : kChecks) {
    checks[name] = {{"pass", true}, {"criteria", json::array()}, {"seconds", 0.0}};
  }
  const auto first = out / "run1";
  const auto second = out / "run2";
  for (const auto& name : experiment_names()) {
    ExperimentOptions opts;
    opts.seed = seed;
    opts.exec = Exec::kParallel;
    std::cerr << "running " << name << " ..." << std::endl;
    const auto rep = run_experiment_to(name, json::object(), opts, first / name);
    std::map<std::string, int> groups;
    for (const auto& c : rep.criteria) {
      auto& entry = checks.at(c.group);
      auto cj = criterion_json(c);
      cj["experiment"] = name;
      entry["criteria"].push_back(cj);
      entry["pass"] = entry["pass"].get<bool>() && c.pass;
      groups[c.group] = 1;
    }
    for (const auto& [group, _] : groups) {
      checks[group]["seconds"] = checks[group]["seconds"].get<double>() + rep.runtime_seconds;
    }
    std::cerr << "  " << rep.runtime_seconds << " s; rerunning serially" << std::endl;

    opts.exec = Exec::kSerial;
    const auto again = run_experiment_to(name, json::object(), opts, second / name);
    const auto bad = mismatched_files(first / name, second / name);
    auto& repro = checks["reproducibility"];
    repro["criteria"].push_back({{"experiment", name},
                                 {"name", "byte-identical rerun"},
                                 {"observed", bad.size()},
                                 {"target", 0},
                                 {"tolerance", 0},
                                 {"pass", bad.empty()},
                                 {"differing_files", bad}});
    repro["pass"] = repro["pass"].get<bool>() && bad.empty();
    repro["seconds"] = repro["seconds"].get<double>() + again.runtime_seconds;
  }
  for (const auto& name : kChecks) {
    if (checks[name]["criteria"].empty()) checks[name]["pass"] = false;
  }
  return checks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string out = "acceptance";
  std::string check;
  std::uint64_t seed = 42;
  bool record = false;
  app.add_option("--out", out, "working directory");
  app.add_option("--check", check, "report one recorded check")->check(CLI::IsMember(kChecks));
  app.add_option("--seed", seed, "seed for every experiment");
  app.add_flag("--record", record, "exit 0 whenever the suite completes");
  CLI11_PARSE(app, argc, argv);

  const fs::path dir(out);
  const fs::path summary = dir / "acceptance.json";
  try {
    if (!check.empty()) {
      if (!fs::exists(summary)) {
        std::cerr << summary << " not found; run the suite first\n";
        return 2;
      }
      const json checks = load_json_file(summary);
      print_line(check, checks.at(check));
      return checks.at(check).at("pass").get<bool>() ? 0 : 1;
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    const json checks = run_suite(dir, seed);
    std::ofstream(summary) << checks.dump(2) << '\n';
    bool all = true;
    for (const auto& name : kChecks) {
      print_line(name, checks.at(name));
      all = all && checks.at(name).at("pass").get<bool>();
    }
    std::cout << (all ? "acceptance: all checks passed" : "acceptance: some checks failed") << '\n';
    return all || record ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
