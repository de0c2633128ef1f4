#include "selfavg/model.hpp"

#include <cmath>
#include <string>

#include "selfavg/errors.hpp"

namespace selfavg {

void ModelSpec::validate() const {
  if (n_sites < 1) throw ValidationError("model.n must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("model.beta must be finite and >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("model.alpha must be finite and >= 0");
  if (interactions.empty()) throw ValidationError("model.arities must list at least one arity");
  double norm = 0.0;
  for (const auto& term : interactions) {
    if (term.arity < 1) throw ValidationError("model.arities: arity must be >= 1");
    if (!std::isfinite(term.weight)) throw ValidationError("model.arities: weight must be finite");
    norm += term.weight * term.weight;
  }
  if (interactions.size() == 1) {
    if (interactions.front().weight != 1.0)
      throw ValidationError("model.arities: a single-arity model uses weight 1");
  } else if (std::fabs(norm - 1.0) > 1e-9) {
    throw ValidationError("model.arities: squared weights must sum to 1 (got " + std::to_string(norm) + ")");
  }
  for (const auto& p : perturbations) {
    if (p.arity < 1) throw ValidationError("perturbations: arity must be >= 1");
    if (!(p.rate >= 0.0) || !std::isfinite(p.rate)) throw ValidationError("perturbations: rate must be >= 0");
    if (!std::isfinite(p.strength) || !std::isfinite(p.weight))
      throw ValidationError("perturbations: strength and weight must be finite");
    if (beta == 0.0 && p.strength * p.weight != 0.0)
      throw ValidationError("perturbations: a non-zero strength requires beta > 0");
  }
}

bool ModelSpec::even_arities() const {
  for (const auto& term : interactions)
    if (term.arity % 2 != 0) return false;
  for (const auto& p : perturbations)
    if (p.arity % 2 != 0) return false;
  return true;
}

namespace {

CouplingTerm draw_coupling(int arity, int n, double scale, int origin, Rng& rng) {
  CouplingTerm c;
  c.sites.resize(static_cast<std::size_t>(arity));
  for (auto& site : c.sites) site = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(n)));
  c.sign = rng.sign();
  c.strength_scale = scale;
  c.origin = origin;
  return c;
}

}  // namespace

DisorderRealization sample_disorder(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  DisorderRealization out;
  out.n_sites = spec.n_sites;
  out.seed = seed;
  Rng rng(seed);
  const int n = spec.n_sites;
  for (const auto& term : spec.interactions) {
    const auto count = rng.poisson(spec.alpha * n);
    for (std::uint64_t k = 0; k < count; ++k) out.couplings.push_back(draw_coupling(term.arity, n, term.weight, -1, rng));
  }
  for (std::size_t idx = 0; idx < spec.perturbations.size(); ++idx) {
    const auto& p = spec.perturbations[idx];
    const double coefficient = p.strength * p.weight;
    const double scale = coefficient == 0.0 ? 0.0 : coefficient / spec.beta;
    const auto count = rng.poisson(p.rate);
    for (std::uint64_t k = 0; k < count; ++k)
      out.couplings.push_back(draw_coupling(p.arity, n, scale, static_cast<int>(idx), rng));
  }
  return out;
}

double energy(const DisorderRealization& realization, std::span<const std::int8_t> config) {
  if (config.size() != static_cast<std::size_t>(realization.n_sites))
    throw ValidationError("energy: configuration length differs from n_sites");
  double h = 0.0;
  for (const auto& c : realization.couplings) {
    int product = 1;
    for (auto site : c.sites) {
      if (site >= config.size()) throw ValidationError("energy: coupling site index out of range (corrupt realization)");
      product *= config[site];
    }
    h -= c.sign * c.strength_scale * product;
  }
  return h;
}

std::uint32_t reduced_mask(const CouplingTerm& coupling) {
  std::uint32_t mask = 0;
  for (auto site : coupling.sites) {
    if (site >= 32) throw CapacityError("reduced_mask: site index beyond 32-bit mask");
    mask ^= (1U << site);
  }
  return mask;
}

MergedParams merge_perturbation_params(double alpha, double alpha_prime, double beta, double beta_prime, int n,
                                       double t) {
  if (!(beta > 0.0)) throw ValidationError("merge_perturbation_params: beta must be > 0");
  if (n < 1) throw ValidationError("merge_perturbation_params: n must be >= 1");
  if (t < 0.0 || t > 1.0) throw ValidationError("merge_perturbation_params: t must lie in [0, 1]");
  MergedParams out;
  const double extra = alpha_prime * t;
  out.merged_rate = alpha + extra / n;
  const double total = alpha * n + extra;
  out.prob_scaled_sign = total > 0.0 ? extra / total : 0.0;
  out.scale = beta_prime / beta;
  return out;
}

std::vector<CouplingTerm> sample_merged_couplings(const MergedParams& merged, int n, Rng& rng) {
  std::vector<CouplingTerm> out;
  const auto count = rng.poisson(merged.merged_rate * n);
  for (std::uint64_t k = 0; k < count; ++k) {
    const bool scaled = rng.bernoulli(merged.prob_scaled_sign);
    out.push_back(draw_coupling(2, n, scaled ? merged.scale : 1.0, scaled ? 0 : -1, rng));
  }
  return out;
}

std::vector<CouplingTerm> sample_two_source_couplings(double alpha, double alpha_prime, double scale, int n,
                                                      double t, Rng& rng) {
  std::vector<CouplingTerm> out;
  const auto base = rng.poisson(alpha * n);
  for (std::uint64_t k = 0; k < base; ++k) out.push_back(draw_coupling(2, n, 1.0, -1, rng));
  const auto extra = rng.poisson(alpha_prime * t);
  for (std::uint64_t k = 0; k < extra; ++k) out.push_back(draw_coupling(2, n, scale, 0, rng));
  return out;
}

}  // namespace selfavg
