#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "selfavg/model.hpp"
#include "selfavg/stats.hpp"

namespace selfavg::exact {

struct Options {
  /// Largest N the 2^N enumeration accepts.
  int enumeration_cap = 20;
};

/// One term theta * prod_{i in mask} sigma_i of the Boltzmann log-weight.
struct MaskTerm {
  std::uint32_t mask = 0;
  double theta = 0.0;
};

/// log-weight terms beta * sign * strength_scale * sigma_S of a realization.
std::vector<MaskTerm> log_weight_terms(const DisorderRealization& realization, double beta);

/// Dense Gibbs state of one realization: the log partition function and the
/// full table of correlators omega(sigma_S) for every S subset of [0, N).
///
/// Configurations are bitmasks (bit i set means sigma_i = -1), so
/// sigma_S(x) = (-1)^popcount(x & S). The log-weights over all 2^N states are
/// the Walsh-Hadamard transform of the coefficient vector indexed by mask, and
/// the correlator table is the transform of the normalized Boltzmann weights:
/// two O(N 2^N) passes, independent of the number of couplings.
class GibbsState {
 public:
  static GibbsState compute(int n_sites, std::span<const MaskTerm> terms, const Options& options = {});
  static GibbsState compute(const DisorderRealization& realization, double beta, const Options& options = {});

  int n_sites() const { return n_sites_; }
  double log_partition() const { return log_partition_; }

  /// omega(sigma_S) for S given as a bitmask.
  double correlation(std::uint32_t mask) const { return table_[mask]; }
  /// Site multiset; repeated sites cancel in pairs.
  double correlation(std::span<const std::uint32_t> sites) const;

  std::span<const double> table() const { return table_; }

  /// Normalized Boltzmann probability of configuration `x`.
  double probability(std::uint32_t x) const;

 private:
  int n_sites_ = 0;
  double log_partition_ = 0.0;
  double max_log_weight_ = 0.0;
  std::vector<double> log_weights_;
  std::vector<double> table_;
};

/// Requested correlators keyed by canonical site set (sorted, pairs removed).
struct CorrelationTensor {
  double beta = 0.0;
  int n_sites = 0;
  std::map<std::vector<std::uint32_t>, double> entries;
  int max_degree = 0;

  /// Throws ValidationError when the set was not requested.
  double at(std::vector<std::uint32_t> sites) const;
};

/// Sorted site set with pairs of equal sites removed.
std::vector<std::uint32_t> canonical_site_set(std::vector<std::uint32_t> sites);

double log_partition(const DisorderRealization& realization, double beta, const Options& options = {});

CorrelationTensor correlation_tensor(const DisorderRealization& realization, double beta,
                                     const std::vector<std::vector<std::uint32_t>>& site_sets,
                                     const Options& options = {});

/// (1/N) E ln Z_N over `n_realizations` seeds derived from `master_seed`.
MeanError quenched_pressure(const ModelSpec& spec, int n_realizations, std::uint64_t master_seed,
                            const Options& options = {}, int parallelism = 1);

}  // namespace selfavg::exact
