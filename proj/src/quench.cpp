#include "selfavg/quench.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "selfavg/errors.hpp"

namespace selfavg::quench {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* backend_name(Backend b) { return b == Backend::exact ? "exact" : "mc"; }

Backend parse_backend(const std::string& name) {
  if (name == "exact") return Backend::exact;
  if (name == "mc") return Backend::mc;
  throw ValidationError("ensemble.backend must be 'exact' or 'mc', got '" + name + "'");
}

void EnsembleSpec::validate() const {
  if (n_realizations < 2) throw ValidationError("ensemble.realizations must be >= 2");
  if (parallelism < 1) throw ValidationError("ensemble.parallelism must be >= 1");
  if (n_chains < 0) throw ValidationError("ensemble.chains must be >= 0");
  if (reduction_cap < 0) throw ValidationError("ensemble.reduction_cap must be >= 0");
  if (backend == Backend::mc) chain.validate();
}

std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(index));
}

DisorderRealization realization(const ModelSpec& spec, const EnsembleSpec& ens, std::size_t index) {
  return sample_disorder(spec, realization_seed(ens.master_seed, index));
}

std::vector<std::vector<double>> collect(
    const ModelSpec& spec, const EnsembleSpec& ens,
    const std::function<std::vector<double>(const DisorderRealization&, std::size_t)>& per_realization) {
  spec.validate();
  ens.validate();
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(ens.n_realizations));
  parallel_for(rows.size(), ens.parallelism, [&](std::size_t i) {
    rows[i] = per_realization(realization(spec, ens, i), i);
  });
  return rows;
}

const MeanError& AggregatedReport::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw ValidationError("report has no quantity '" + name + "'");
}

AggregatedReport run_ensemble(const EnsembleTask& task, const ModelSpec& spec, const EnsembleSpec& ens) {
  const auto rows = collect(spec, ens, task.per_realization);
  AggregatedReport out;
  out.names = task.reported;
  out.n_realizations = ens.n_realizations;
  auto statistic = task.statistic;
  if (!statistic) statistic = [](std::span<const double> means) { return std::vector<double>(means.begin(), means.end()); };
  out.values = jackknife(rows, statistic);
  if (!out.names.empty() && out.names.size() != out.values.size())
    throw ValidationError("run_ensemble: task reports " + std::to_string(out.values.size()) + " values but names " +
                          std::to_string(out.names.size()));
  return out;
}

std::vector<SweepRow> sweep_sizes(const std::function<ResidualSummary(const ModelSpec&, const EnsembleSpec&)>& task,
                                  const ModelSpec& spec_template, const std::vector<int>& sizes,
                                  const EnsembleSpec& ens) {
  if (sizes.empty()) throw ValidationError("sweep: sizes must not be empty");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1]) throw ValidationError("sweep: sizes must be strictly ascending");
  std::vector<SweepRow> rows;
  for (int n : sizes) {
    ModelSpec spec = spec_template;
    spec.n_sites = n;
    rows.push_back({n, task(spec, ens)});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "N,lhs,rhs,residual,normalized_residual,stderr\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += std::to_string(r.n_sites) + ',' + fmt(s.lhs) + ',' + fmt(s.rhs) + ',' + fmt(s.residual) + ',' +
           fmt(s.normalized_residual) + ',' + fmt(s.stderr) + '\n';
  }
  return out;
}

std::string spec_fingerprint(const ModelSpec& spec) {
  std::ostringstream os;
  os << "n=" << spec.n_sites << ";beta=" << fmt(spec.beta) << ";alpha=" << fmt(spec.alpha);
  for (const auto& i : spec.interactions) os << ";p" << i.arity << '=' << fmt(i.weight);
  for (const auto& p : spec.perturbations)
    os << ";pert(" << p.arity << ',' << fmt(p.rate) << ',' << fmt(p.strength) << ',' << fmt(p.weight) << ')';
  return os.str();
}

std::string spec_hash(const ModelSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : spec_fingerprint(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string run_manifest(const ModelSpec& spec, const EnsembleSpec& ens, const std::vector<SweepRow>& rows) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["code_version"] = SELFAVG_VERSION;
  ordered_json model;
  model["n"] = spec.n_sites;
  model["alpha"] = spec.alpha;
  model["beta"] = spec.beta;
  for (const auto& i : spec.interactions) model["interactions"].push_back({{"arity", i.arity}, {"weight", i.weight}});
  model["perturbations"] = ordered_json::array();
  for (const auto& p : spec.perturbations)
    model["perturbations"].push_back(
        {{"arity", p.arity}, {"rate", p.rate}, {"strength", p.strength}, {"weight", p.weight}});
  j["model"] = model;
  j["spec_hash"] = spec_hash(spec);
  j["ensemble"] = {{"realizations", ens.n_realizations},
                   {"seed", ens.master_seed},
                   {"backend", backend_name(ens.backend)},
                   {"seed_rule", "realization i uses splitmix64(seed ^ splitmix64(i + 0xA5A5A5A5A5A5A5A5))"}};
  if (ens.backend == Backend::mc)
    j["ensemble"]["chain"] = {{"sweeps", ens.chain.n_sweeps},
                              {"burn_in", ens.chain.burn_in_sweeps},
                              {"thinning", ens.chain.thinning},
                              {"chains", ens.n_chains}};
  j["rows"] = ordered_json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"N", r.n_sites},
                         {"lhs", r.summary.lhs},
                         {"rhs", r.summary.rhs},
                         {"residual", r.summary.residual},
                         {"normalized_residual", r.summary.normalized_residual},
                         {"stderr", r.summary.stderr}});
  return j.dump(2) + "\n";
}

}  // namespace selfavg::quench
