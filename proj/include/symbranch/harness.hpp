#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symbranch/parallel.hpp"

namespace symbranch {

/// Shortest round-trip text for a double ("%.17g"); identical bits give
/// identical text, which is what the byte-for-byte rerun check relies on.
std::string format_number(double x);

/// Fixed-column table written as CSV.
class CsvTable {
 public:
  CsvTable(std::string name, std::vector<std::string> columns);

  template <class... Cells>
  void add(const Cells&... cells) {
    std::vector<std::string> row;
    row.reserve(sizeof...(Cells));
    (row.push_back(cell(cells)), ...);
    push(std::move(row));
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return rows_.size(); }
  void write(std::ostream& out) const;

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& x) { return x; }
  static std::string cell(const char* x) { return x; }
  void push(std::vector<std::string> row);

  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// What a command produces: a JSON summary and any number of CSV tables.
struct CommandOutput {
  std::string stem;
  nlohmann::json summary;
  std::vector<CsvTable> tables;
  bool pass = true;
};

/// Writes <dir>/<stem>.json and <dir>/<table name>.csv, creating `dir`.
void write_output(const CommandOutput& out, const std::filesystem::path& dir);

/// Draws `samples` exit points from (u, v) and compares them with the density.
/// CSV columns: axis, magnitude.
CommandOutput exitlaw_validate_command(double rho, double u, double v, std::size_t samples,
                                       std::uint64_t seed, Exec exec = Exec::kParallel);

/// Finite-gamma ensemble. CSV columns: replica, time, site, u, v.
CommandOutput sbm_run_command(const nlohmann::json& config, Exec exec = Exec::kParallel);

/// Infinite-rate ensemble by Trotter or PDMP. CSV columns: replica, time, site,
/// u, v; the PDMP also writes per-replica diagnostics.
CommandOutput sbminf_run_command(const nlohmann::json& config, Exec exec = Exec::kParallel);

/// kind: moment | coalesce | selfdual.
CommandOutput dual_command(const std::string& kind, const nlohmann::json& config,
                           Exec exec = Exec::kParallel);

/// kind: run | compare.
CommandOutput voter_command(const std::string& kind, const nlohmann::json& config,
                            Exec exec = Exec::kParallel);

}  // namespace symbranch
