#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symbranch/harness.hpp"
#include "symbranch/parallel.hpp"

namespace symbranch {

/// One pass/fail check. `group` names the acceptance check it feeds.
struct Criterion {
  std::string group;
  std::string name;
  double observed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct SummaryReport {
  std::string experiment;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  std::vector<Criterion> criteria;
  /// Wall time; kept out of the JSON so reruns compare byte for byte.
  double runtime_seconds = 0.0;

  /// Registers a criterion; names must be unique within a report.
  void check(const std::string& group, const std::string& name, double observed, double target,
             double tolerance, bool pass);
  bool passed() const;
  nlohmann::json to_json() const;
};

struct ExperimentResult {
  SummaryReport report;
  std::vector<CsvTable> tables;
};

struct ExperimentOptions {
  /// Overrides the "seed" key of the config.
  std::optional<std::uint64_t> seed;
  Exec exec = Exec::kParallel;
};

const std::vector<std::string>& experiment_names();

/// Runs one experiment. The config is a JSON object whose keys are specific to
/// the experiment plus "seed" and an optional "experiment" that must match.
/// Throws ConfigError for an unknown experiment or invalid config.
ExperimentResult run_experiment(const std::string& name, const nlohmann::json& config,
                                const ExperimentOptions& options = {});

/// Runs and writes <out>/<name>.json and <out>/<name>.csv.
SummaryReport run_experiment_to(const std::string& name, const nlohmann::json& config,
                                const ExperimentOptions& options,
                                const std::filesystem::path& out);

}  // namespace symbranch
