#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "selfavg/rng.hpp"

namespace selfavg {

/// One p-spin term of the base Hamiltonian: arity p and mixing weight a_p.
struct Interaction {
  int arity = 2;
  double weight = 1.0;
};

/// A size-independent Poisson perturbation: on average `rate` extra p-spin
/// links (O(1), never scaled with N) entering the Boltzmann exponent as
/// +strength * weight * J * sigma...sigma.
struct PerturbationSpec {
  int arity = 2;
  double rate = 0.0;
  double strength = 0.0;
  double weight = 1.0;
};

/// Diluted p-spin glass: N sites, Poisson(alpha*N) couplings per arity.
struct ModelSpec {
  int n_sites = 1;
  double beta = 1.0;
  double alpha = 0.0;
  std::vector<Interaction> interactions{{2, 1.0}};
  std::vector<PerturbationSpec> perturbations;

  /// Throws ValidationError when an invariant fails (n >= 1, arities >= 1,
  /// beta, alpha, rates >= 0, sum of a_p^2 == 1 for mixtures).
  void validate() const;

  /// True when every interaction and perturbation has even arity.
  bool even_arities() const;

  ModelSpec without_perturbations() const {
    ModelSpec copy = *this;
    copy.perturbations.clear();
    return copy;
  }
};

/// H contribution -sign * strength_scale * prod sigma_{sites}. Sites are
/// 0-based internally; duplicates are allowed (sigma^2 = 1).
struct CouplingTerm {
  int sign = 1;
  std::vector<std::uint32_t> sites;
  double strength_scale = 1.0;
  /// -1 for base couplings, otherwise the index of the perturbation that produced it.
  int origin = -1;

  bool operator==(const CouplingTerm&) const = default;
};

struct DisorderRealization {
  int n_sites = 0;
  std::vector<CouplingTerm> couplings;
  std::uint64_t seed = 0;

  bool operator==(const DisorderRealization&) const = default;
};

/// Draws one quenched sample. For each interaction the coupling count is
/// Poisson(alpha*N); for each perturbation Poisson(rate). Sites are iid uniform,
/// signs symmetric. Perturbation links carry strength_scale = strength*weight/beta.
/// Draw order is fixed (interactions, then perturbations; per coupling: count,
/// sites, sign), so perturbation strengths never influence which sites are drawn.
DisorderRealization sample_disorder(const ModelSpec& spec, std::uint64_t seed);

/// Spins are +1/-1. Throws ValidationError on a corrupt realization.
double energy(const DisorderRealization& realization, std::span<const std::int8_t> config);

/// XOR of the site bits of a coupling (pairs of equal sites cancel). Requires N <= 32.
std::uint32_t reduced_mask(const CouplingTerm& coupling);

/// Rate-merging of a size-independent perturbation into the base ensemble.
struct MergedParams {
  double merged_rate = 0.0;       ///< per-site rate alpha + alpha' t / N
  double prob_scaled_sign = 0.0;  ///< alpha' t / (alpha N + alpha' t)
  double scale = 1.0;             ///< beta' / beta
};

MergedParams merge_perturbation_params(double alpha, double alpha_prime, double beta, double beta_prime,
                                       int n, double t);

/// Pair-coupling list drawn from the merged recipe: Poisson(merged_rate*N)
/// couplings, each carrying strength_scale `scale` with probability prob_scaled_sign.
std::vector<CouplingTerm> sample_merged_couplings(const MergedParams& merged, int n, Rng& rng);

/// Same ensemble drawn from two independent sources (base plus perturbation).
std::vector<CouplingTerm> sample_two_source_couplings(double alpha, double alpha_prime, double scale,
                                                      int n, double t, Rng& rng);

}  // namespace selfavg
