#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "selfavg/model.hpp"
#include "selfavg/monomial.hpp"
#include "selfavg/rng.hpp"
#include "selfavg/stats.hpp"

namespace selfavg::sampler {

/// n_sweeps counts every sweep including burn-in; one sweep is N proposals.
struct ChainConfig {
  long n_sweeps = 100000;
  long burn_in_sweeps = 1000;
  long thinning = 1;
  std::uint64_t seed = 0;

  void validate() const;
  long n_measurements() const { return (n_sweeps - burn_in_sweeps) / thinning; }
};

/// Single-spin-flip Metropolis chain targeting exp(-beta H) on one realization.
class MetropolisChain {
 public:
  MetropolisChain(const DisorderRealization& realization, double beta, std::uint64_t seed);

  /// One proposal at a uniformly random site.
  void step();
  void sweep();

  std::span<const std::int8_t> spins() const { return spins_; }
  /// Bitmask encoding (bit i set when sigma_i = -1); requires N <= 32.
  std::uint32_t state_mask() const;
  long accepted() const { return accepted_; }
  long proposed() const { return proposed_; }

 private:
  int n_;
  Rng rng_;
  std::vector<std::int8_t> spins_;
  std::vector<double> theta_;              // log-weight coefficient per coupling
  std::vector<std::int8_t> chi_;           // current product of spins per coupling
  std::vector<std::vector<std::uint32_t>> odd_links_;     // couplings flipped by site i
  std::vector<std::vector<std::uint32_t>> coupling_sites_;
  long accepted_ = 0;
  long proposed_ = 0;
};

struct ChainRun {
  std::vector<std::vector<std::int8_t>> samples;
  double acceptance_rate = 0.0;
};

ChainRun run_chain(const DisorderRealization& realization, double beta, const ChainConfig& cfg);

/// Streaming variant: `on_measure` sees each emitted configuration.
double run_chain(const DisorderRealization& realization, double beta, const ChainConfig& cfg,
                 const std::function<void(std::span<const std::int8_t>)>& on_measure);

/// prod_f q_{L_f}^{e_f} on explicit replica configurations; replicas[r - 1]
/// holds the configuration of replica label r.
double monomial_value(const ReplicaMonomial& monomial, std::span<const std::span<const std::int8_t>> replicas);

/// Runs n_chains independent chains on the same realization. Chains are split
/// into floor(n_chains / n_replicas) groups, each supplying one set of
/// replicas; the per-measurement group average is blocked for the error bar.
MeanError mc_estimate_monomial(const DisorderRealization& realization, double beta,
                               const ReplicaMonomial& monomial, int n_chains, const ChainConfig& cfg);

/// Several monomials measured on one shared set of chains (common random numbers).
std::vector<MeanError> mc_estimate_monomials(const DisorderRealization& realization, double beta,
                                             std::span<const ReplicaMonomial> monomials, int n_chains,
                                             const ChainConfig& cfg);

}  // namespace selfavg::sampler
