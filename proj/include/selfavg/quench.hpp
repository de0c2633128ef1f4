#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "selfavg/exact.hpp"
#include "selfavg/model.hpp"
#include "selfavg/sampler.hpp"
#include "selfavg/stats.hpp"

namespace selfavg::quench {

enum class Backend { exact, mc };

const char* backend_name(Backend b);
Backend parse_backend(const std::string& name);

struct EnsembleSpec {
  int n_realizations = 100;
  std::uint64_t master_seed = 1;
  int parallelism = 1;
  Backend backend = Backend::exact;
  sampler::ChainConfig chain;
  /// Chains per realization for the mc backend; 0 means one per replica.
  int n_chains = 0;
  exact::Options exact;
  /// Largest total site-index count accepted by the moment reduction.
  int reduction_cap = 6;

  void validate() const;
};

/// Seed of realization `index`; depends only on (master, index).
std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t index);
DisorderRealization realization(const ModelSpec& spec, const EnsembleSpec& ens, std::size_t index);

/// Runs `per_realization` on every realization and returns the rows in index order.
std::vector<std::vector<double>> collect(
    const ModelSpec& spec, const EnsembleSpec& ens,
    const std::function<std::vector<double>(const DisorderRealization&, std::size_t)>& per_realization);

/// A task measures raw columns per realization and maps their means to the
/// reported scalars; errors come from the leave-one-out jackknife of that map.
struct EnsembleTask {
  std::vector<std::string> reported;
  std::function<std::vector<double>(const DisorderRealization&, std::size_t)> per_realization;
  /// Identity on the column means when empty.
  std::function<std::vector<double>(std::span<const double>)> statistic;
};

struct AggregatedReport {
  std::vector<std::string> names;
  std::vector<MeanError> values;
  int n_realizations = 0;

  const MeanError& at(const std::string& name) const;
};

AggregatedReport run_ensemble(const EnsembleTask& task, const ModelSpec& spec, const EnsembleSpec& ens);

struct ResidualSummary {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double normalized_residual = 0.0;
  double stderr = 0.0;
};

struct SweepRow {
  int n_sites = 0;
  ResidualSummary summary;
};

/// One evaluation per size; every size reuses the same master seed stream.
std::vector<SweepRow> sweep_sizes(const std::function<ResidualSummary(const ModelSpec&, const EnsembleSpec&)>& task,
                                  const ModelSpec& spec_template, const std::vector<int>& sizes,
                                  const EnsembleSpec& ens);

std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Stable textual form of a model spec and its FNV-1a hash, used in manifests.
std::string spec_fingerprint(const ModelSpec& spec);
std::string spec_hash(const ModelSpec& spec);

/// JSON manifest: model, ensemble, code version, spec hash and per-row results.
std::string run_manifest(const ModelSpec& spec, const EnsembleSpec& ens, const std::vector<SweepRow>& rows);

}  // namespace selfavg::quench
