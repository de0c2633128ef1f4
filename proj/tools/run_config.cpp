#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "selfavg/errors.hpp"
#include "selfavg/stats.hpp"

namespace selfavg::cli {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"model", {"n", "alpha", "beta", "arities", "weights"}},
      {"perturbations", {"pert1", "pert2", "pert3", "pert4", "pert5", "pert6", "pert7", "pert8"}},
      {"ensemble",
       {"realizations", "seed", "parallelism", "backend", "sweeps", "burn_in", "thinning", "chains",
        "enumeration_cap", "reduction_cap"}},
      {"task",
       {"identity", "s", "a", "r", "pow_r", "pow_s", "phi", "beta_prime", "beta_prime_2", "alpha_prime", "monomial",
        "sizes", "order", "measure", "view"}},
      {"output", {"format", "path", "manifest"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text, const char* kind) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ValidationError(key + ": expected " + kind + ", got '" + text + "'");
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

bool RunConfig::known_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) return false;
  const auto it = schema().find(key.substr(0, dot));
  return it != schema().end() && it->second.count(key.substr(dot + 1)) > 0;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ValidationError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    if (section.empty()) throw ValidationError(where + ": setting outside of any section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!known_key(key)) throw ValidationError(where + ": unknown key '" + key + "'");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known_key(key)) throw ValidationError("unknown configuration key '" + key + "'");
  values_[key] = value;
}

void RunConfig::erase_prefix(const std::string& prefix) {
  for (auto it = values_.begin(); it != values_.end();)
    it = it->first.rfind(prefix, 0) == 0 ? values_.erase(it) : std::next(it);
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<long>(key, it->second, "an integer");
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<std::uint64_t>(key, it->second, "a non-negative integer");
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<double>(key, it->second, "a number");
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ValidationError(key + ": expected true or false, got '" + it->second + "'");
}

std::vector<double> RunConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split(it->second, ',')) out.push_back(parse_number<double>(key, item, "a number"));
  return out;
}

ModelSpec RunConfig::model() const {
  ModelSpec spec;
  spec.n_sites = static_cast<int>(get_int("model.n", 8));
  spec.alpha = get_double("model.alpha", 1.0);
  spec.beta = get_double("model.beta", 1.0);
  const auto arities = get_list("model.arities", {2.0});
  const auto weights = get_list("model.weights", std::vector<double>(arities.size(), 1.0 / std::sqrt(arities.size())));
  if (weights.size() != arities.size())
    throw ValidationError("model.weights: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(arities.size()) + " arities");
  spec.interactions.clear();
  for (std::size_t i = 0; i < arities.size(); ++i) {
    if (arities[i] != std::floor(arities[i])) throw ValidationError("model.arities: arities must be integers");
    spec.interactions.push_back({static_cast<int>(arities[i]), weights[i]});
  }
  for (int k = 1; k <= 8; ++k) {
    const std::string key = "perturbations.pert" + std::to_string(k);
    if (!has(key)) continue;
    const auto parts = split(get_string(key, ""), ',');
    if (parts.size() < 3 || parts.size() > 4)
      throw ValidationError(key + ": expected 'arity,rate,strength[,weight]'");
    PerturbationSpec p;
    p.arity = static_cast<int>(parse_number<long>(key, parts[0], "an integer arity"));
    p.rate = parse_number<double>(key, parts[1], "a rate");
    p.strength = parse_number<double>(key, parts[2], "a strength");
    if (parts.size() == 4) p.weight = parse_number<double>(key, parts[3], "a weight");
    spec.perturbations.push_back(p);
  }
  spec.validate();
  return spec;
}

quench::EnsembleSpec RunConfig::ensemble() const {
  quench::EnsembleSpec ens;
  ens.n_realizations = static_cast<int>(get_int("ensemble.realizations", 100));
  ens.master_seed = get_u64("ensemble.seed", 1);
  ens.parallelism = static_cast<int>(get_int("ensemble.parallelism", default_parallelism()));
  ens.backend = quench::parse_backend(get_string("ensemble.backend", "exact"));
  ens.chain.n_sweeps = get_int("ensemble.sweeps", ens.chain.n_sweeps);
  ens.chain.burn_in_sweeps = get_int("ensemble.burn_in", ens.chain.burn_in_sweeps);
  ens.chain.thinning = get_int("ensemble.thinning", ens.chain.thinning);
  ens.n_chains = static_cast<int>(get_int("ensemble.chains", 0));
  ens.exact.enumeration_cap = static_cast<int>(get_int("ensemble.enumeration_cap", ens.exact.enumeration_cap));
  ens.reduction_cap = static_cast<int>(get_int("ensemble.reduction_cap", ens.reduction_cap));
  ens.validate();
  return ens;
}

nlohmann::ordered_json RunConfig::echo() const {
  using nlohmann::ordered_json;
  const auto spec = model();
  const auto ens = ensemble();
  ordered_json j;
  ordered_json arities = ordered_json::array(), weights = ordered_json::array();
  for (const auto& it : spec.interactions) {
    arities.push_back(it.arity);
    weights.push_back(it.weight);
  }
  j["model"] = {{"n", spec.n_sites}, {"alpha", spec.alpha}, {"beta", spec.beta}, {"arities", arities}, {"weights", weights}};
  j["perturbations"] = ordered_json::array();
  for (const auto& p : spec.perturbations)
    j["perturbations"].push_back({{"arity", p.arity}, {"rate", p.rate}, {"strength", p.strength}, {"weight", p.weight}});
  j["ensemble"] = {{"realizations", ens.n_realizations},
                   {"seed", ens.master_seed},
                   {"backend", quench::backend_name(ens.backend)},
                   {"sweeps", ens.chain.n_sweeps},
                   {"burn_in", ens.chain.burn_in_sweeps},
                   {"thinning", ens.chain.thinning},
                   {"chains", ens.n_chains},
                   {"enumeration_cap", ens.exact.enumeration_cap},
                   {"reduction_cap", ens.reduction_cap}};
  for (const char* section : {"task", "output"}) {
    ordered_json s = ordered_json::object();
    const std::string prefix = std::string(section) + ".";
    for (const auto& [key, value] : values_)
      if (key.rfind(prefix, 0) == 0) s[key.substr(prefix.size())] = value;
    j[section] = s;
  }
  return j;
}

}  // namespace selfavg::cli
