#include "symbranch/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace symbranch {

using nlohmann::json;

ConfigReader::ConfigReader(json value, std::string path)
    : value_(std::move(value)), path_(std::move(path)) {
  if (value_.is_null()) value_ = json::object();
  if (!value_.is_object()) throw ConfigError(path_, "expected an object");
}

bool ConfigReader::has(const std::string& key) const { return value_.contains(key); }

const json* ConfigReader::find(const std::string& key) {
  used_.insert(key);
  const auto it = value_.find(key);
  return it == value_.end() ? nullptr : &*it;
}

double ConfigReader::number(const std::string& key, double fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError(key_path(key), "expected a finite number");
  return x;
}

double ConfigReader::number(const std::string& key) {
  if (!has(key)) throw ConfigError(key_path(key), "required key missing");
  return number(key, 0.0);
}

std::int64_t ConfigReader::integer(const std::string& key, std::int64_t fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
  return v->get<std::int64_t>();
}

std::size_t ConfigReader::count(const std::string& key, std::size_t fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
    throw ConfigError(key_path(key), "expected a nonnegative integer");
  }
  return v->get<std::size_t>();
}

std::uint64_t ConfigReader::seed(const std::string& key, std::uint64_t fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return v->get<std::uint64_t>();
  throw ConfigError(key_path(key), "expected a nonnegative 64-bit integer");
}

bool ConfigReader::flag(const std::string& key, bool fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
  return v->get<bool>();
}

std::string ConfigReader::text(const std::string& key, const std::string& fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
  return v->get<std::string>();
}

std::string ConfigReader::choice(const std::string& key, const std::string& fallback,
                                 const std::vector<std::string>& allowed) {
  const std::string s = text(key, fallback);
  for (const auto& a : allowed) {
    if (a == s) return s;
  }
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
  throw ConfigError(key_path(key), "unknown value '" + s + "' (expected one of " + list + ")");
}

std::vector<double> ConfigReader::numbers(const std::string& key, std::vector<double> fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& x = (*v)[i];
    if (!x.is_number()) {
      throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]", "expected a number");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::size_t> ConfigReader::counts(const std::string& key,
                                              std::vector<std::size_t> fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& x = (*v)[i];
    if (!x.is_number_integer() || x.get<std::int64_t>() < 0) {
      throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]",
                        "expected a nonnegative integer");
    }
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

std::vector<std::pair<double, double>> ConfigReader::number_pairs(
    const std::string& key, std::vector<std::pair<double, double>> fallback) {
  const json* v = find(key);
  if (v == nullptr) return fallback;
  if (!v->is_array()) throw ConfigError(key_path(key), "expected an array of pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& x = (*v)[i];
    if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) {
      throw ConfigError(key_path(key) + "[" + std::to_string(i) + "]",
                        "expected a pair of numbers");
    }
    out.emplace_back(x[0].get<double>(), x[1].get<double>());
  }
  return out;
}

ScalarField ConfigReader::field(const std::string& key, std::size_t sites, double fallback) {
  const json* v = find(key);
  if (v == nullptr) return ScalarField(sites, fallback);
  if (v->is_number()) return ScalarField(sites, v->get<double>());
  auto values = numbers(key, {});
  if (values.size() != sites) {
    throw ConfigError(key_path(key), "expected " + std::to_string(sites) + " entries, got " +
                                         std::to_string(values.size()));
  }
  return values;
}

ConfigReader& ConfigReader::child(const std::string& key) {
  const json* v = find(key);
  children_.emplace_back(v == nullptr ? json::object() : *v, key_path(key));
  return children_.back();
}

json ConfigReader::raw(const std::string& key) {
  const json* v = find(key);
  return v == nullptr ? json() : *v;
}

double ConfigReader::in_range(const std::string& key, double value, double lo, double hi) const {
  if (!(value >= lo && value <= hi)) {
    throw ConfigError(key_path(key), "value " + std::to_string(value) + " outside [" +
                                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return value;
}

void ConfigReader::finish() const {
  for (auto it = value_.begin(); it != value_.end(); ++it) {
    if (!used_.contains(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }
  for (const auto& c : children_) c.finish();
}

json load_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("$", "cannot open config file " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
}

SiteGraph read_graph(ConfigReader& reader) {
  const std::string type = reader.choice("type", "torus", {"torus", "dumbbell", "single_site"});
  try {
    if (type == "torus") {
      const auto d = reader.integer("dimension", 1);
      const auto side = reader.integer("side", 8);
      if (d < 1 || d > 3) throw ConfigError(reader.path() + ".dimension", "expected 1, 2 or 3");
      if (side < 3) throw ConfigError(reader.path() + ".side", "torus side must be >= 3");
      return build_torus(static_cast<int>(d), static_cast<int>(side));
    }
    if (type == "dumbbell") {
      const double rate = reader.number("rate", 1.0);
      if (!(rate > 0.0)) throw ConfigError(reader.path() + ".rate", "rate must be > 0");
      return build_dumbbell(rate);
    }
    return build_single_site();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(reader.path(), e.what());
  }
}

}  // namespace symbranch
