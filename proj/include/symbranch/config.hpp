#pragma once

#include <cstdint>
#include <list>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "symbranch/lattice.hpp"
#include "symbranch/sbm_finite.hpp"

namespace symbranch {

/// Invalid configuration; `path()` names the offending key, e.g. "$.graph.side".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Typed view of one JSON object that remembers which keys were read, so
/// leftovers can be rejected with their full path.
class ConfigReader {
 public:
  explicit ConfigReader(nlohmann::json value, std::string path = "$");

  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }

  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::size_t count(const std::string& key, std::size_t fallback);
  std::uint64_t seed(const std::string& key, std::uint64_t fallback);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed);
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback);
  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback);
  /// Array of two-element arrays, e.g. [[1, 1], [2, 0.5]].
  std::vector<std::pair<double, double>> number_pairs(
      const std::string& key, std::vector<std::pair<double, double>> fallback);
  /// Per-site field: a scalar is broadcast to `sites` entries.
  ScalarField field(const std::string& key, std::size_t sites, double fallback);
  /// Nested object; an absent key yields an empty object. The reference stays
  /// valid for the lifetime of this reader, and finish() checks it too.
  ConfigReader& child(const std::string& key);
  /// Raw access for echoing; marks the key as used.
  nlohmann::json raw(const std::string& key);

  /// Checks a numeric range and throws ConfigError naming the key.
  double in_range(const std::string& key, double value, double lo, double hi) const;

  /// Throws ConfigError for the first key that was never read, here or in a child.
  void finish() const;

 private:
  const nlohmann::json* find(const std::string& key);
  std::string key_path(const std::string& key) const { return path_ + "." + key; }

  nlohmann::json value_;
  std::string path_;
  std::set<std::string> used_;
  std::list<ConfigReader> children_;
};

nlohmann::json load_json_file(const std::filesystem::path& file);

/// {"type": "torus", "dimension": d, "side": L} | {"type": "dumbbell", "rate": r}
/// | {"type": "single_site"}.
SiteGraph read_graph(ConfigReader& reader);

}  // namespace symbranch
