#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfavg/model.hpp"
#include "selfavg/quench.hpp"

namespace selfavg::cli {

/// Flat "section.key" -> value store merged from a config file and flags.
///
/// File format, one setting per line:
///
///   # comment
///   [model]
///   n = 8
///   alpha = 2
///
/// Sections: model, perturbations, ensemble, task, output. Unknown sections
/// or keys are rejected with the offending line named.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text, const std::string& origin = "config");
  static RunConfig load(const std::string& path);

  /// Throws ValidationError unless `key` ("section.name") is in the schema.
  void set(const std::string& key, const std::string& value);
  void erase_prefix(const std::string& prefix);
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  ModelSpec model() const;
  quench::EnsembleSpec ensemble() const;

  /// Effective configuration (defaults resolved for model and ensemble);
  /// ensemble.parallelism is left out so reports do not depend on the thread count.
  nlohmann::ordered_json echo() const;

  static bool known_key(const std::string& key);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace selfavg::cli
