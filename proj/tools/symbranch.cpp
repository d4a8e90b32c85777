#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "symbranch/config.hpp"
#include "symbranch/duals.hpp"
#include "symbranch/experiments.hpp"
#include "symbranch/harness.hpp"

namespace {

using namespace symbranch;
using nlohmann::json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfigError = 2;

json load_or_empty(const std::string& file) {
  return file.empty() ? json::object() : load_json_file(file);
}

void print_report(const SummaryReport& rep) {
  for (const auto& c : rep.criteria) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.group << ": " << c.name
              << " observed=" << format_number(c.observed)
              << " target=" << format_number(c.target)
              << " tol=" << format_number(c.tolerance) << '\n';
  }
  std::cout << rep.experiment << ": " << (rep.passed() ? "PASS" : "FAIL") << '\n';
  std::cerr << rep.experiment << " runtime " << rep.runtime_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbiotic branching simulator"};
  app.require_subcommand(1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool serial = false;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    if (with_seed) sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--serial", serial, "run replicas on one thread");
  };

  std::string experiment;
  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(sub, true);
    sub->callback([&experiment, name] { experiment = name; });
  }

  std::string action;
  double rho = 0.0;
  std::vector<double> start{1.0, 1.0};
  std::size_t samples = 100000;
  std::uint64_t exit_seed = 42;
  auto* exitlaw = app.add_subcommand("exitlaw", "exit-law tools")->require_subcommand(1);
  auto* validate = exitlaw->add_subcommand("validate", "sample and compare with the density");
  validate->add_option("--rho", rho, "correlation")->required();
  validate->add_option("--start", start, "start point U,V")->delimiter(',')->expected(2);
  validate->add_option("--samples", samples, "sample count");
  validate->add_option("--seed", exit_seed, "seed");
  validate->add_option("--out", out_dir, "output directory");
  validate->add_flag("--serial", serial, "run on one thread");
  validate->callback([&] { action = "exitlaw validate"; });

  auto* sbm = app.add_subcommand("sbm", "finite-gamma model")->require_subcommand(1);
  auto* sbm_run = sbm->add_subcommand("run", "simulate an ensemble");
  add_common(sbm_run, false);
  sbm_run->callback([&] { action = "sbm run"; });

  auto* sbminf = app.add_subcommand("sbminf", "infinite-rate model")->require_subcommand(1);
  auto* sbminf_run = sbminf->add_subcommand("run", "simulate by Trotter or PDMP");
  add_common(sbminf_run, false);
  sbminf_run->callback([&] { action = "sbminf run"; });

  auto* dual = app.add_subcommand("dual", "duality estimators")->require_subcommand(1);
  for (const char* kind : {"moment", "coalesce", "selfdual"}) {
    auto* sub = dual->add_subcommand(kind, std::string(kind) + " dual");
    add_common(sub, false);
    sub->callback([&action, kind] { action = std::string("dual ") + kind; });
  }

  auto* voter = app.add_subcommand("voter", "voter model")->require_subcommand(1);
  for (const char* kind : {"run", "compare"}) {
    auto* sub = voter->add_subcommand(kind, std::string("voter ") + kind);
    add_common(sub, false);
    sub->callback([&action, kind] { action = std::string("voter ") + kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  const Exec exec = serial ? Exec::kSerial : Exec::kParallel;
  try {
    if (!experiment.empty()) {
      ExperimentOptions opts;
      opts.seed = seed;
      opts.exec = exec;
      const SummaryReport rep =
          run_experiment_to(experiment, load_or_empty(config_file), opts, out_dir);
      print_report(rep);
      return rep.passed() ? kPass : kFail;
    }
    CommandOutput out;
    if (action == "exitlaw validate") {
      out = exitlaw_validate_command(rho, start.at(0), start.at(1), samples, exit_seed, exec);
    } else if (action == "sbm run") {
      out = sbm_run_command(load_or_empty(config_file), exec);
    } else if (action == "sbminf run") {
      out = sbminf_run_command(load_or_empty(config_file), exec);
    } else if (action.rfind("dual ", 0) == 0) {
      out = dual_command(action.substr(5), load_or_empty(config_file), exec);
    } else {
      out = voter_command(action.substr(6), load_or_empty(config_file), exec);
    }
    write_output(out, out_dir);
    std::cout << out.summary.dump(2) << '\n';
    return out.pass ? kPass : kFail;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const HeavyWeightError& e) {
    std::cerr << "config error: " << e.what() << " (set \"force\": true to override)\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
}
