#include "selfavg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfavg/errors.hpp"

namespace selfavg::sampler {

void ChainConfig::validate() const {
  if (burn_in_sweeps < 0) throw ValidationError("ensemble.burn_in must be >= 0");
  if (n_sweeps <= burn_in_sweeps) throw ValidationError("ensemble.sweeps must exceed ensemble.burn_in");
  if (thinning < 1) throw ValidationError("ensemble.thinning must be >= 1");
}

MetropolisChain::MetropolisChain(const DisorderRealization& realization, double beta, std::uint64_t seed)
    : n_(realization.n_sites), rng_(seed) {
  if (n_ < 1) throw ValidationError("sampler: n_sites must be >= 1");
  spins_.resize(static_cast<std::size_t>(n_));
  for (auto& s : spins_) s = static_cast<std::int8_t>(rng_.sign());
  odd_links_.resize(spins_.size());
  const auto& couplings = realization.couplings;
  theta_.reserve(couplings.size());
  for (std::uint32_t c = 0; c < couplings.size(); ++c) {
    const auto& term = couplings[c];
    std::vector<int> count(spins_.size(), 0);
    for (auto site : term.sites) {
      if (site >= spins_.size()) throw ValidationError("sampler: coupling site index out of range");
      ++count[site];
    }
    std::vector<std::uint32_t> odd;
    for (std::uint32_t i = 0; i < count.size(); ++i)
      if (count[i] % 2) odd.push_back(i);
    for (auto i : odd) odd_links_[i].push_back(static_cast<std::uint32_t>(theta_.size()));
    theta_.push_back(beta * term.sign * term.strength_scale);
    coupling_sites_.push_back(std::move(odd));
  }
  chi_.resize(theta_.size());
  for (std::size_t c = 0; c < theta_.size(); ++c) {
    int product = 1;
    for (auto i : coupling_sites_[c]) product *= spins_[i];
    chi_[c] = static_cast<std::int8_t>(product);
  }
}

void MetropolisChain::step() {
  const auto i = static_cast<std::uint32_t>(rng_.below(static_cast<std::uint64_t>(n_)));
  double delta = 0.0;
  for (auto c : odd_links_[i]) delta -= 2.0 * theta_[c] * chi_[c];
  ++proposed_;
  if (delta >= 0.0 || rng_.uniform() < std::exp(delta)) {
    spins_[i] = static_cast<std::int8_t>(-spins_[i]);
    for (auto c : odd_links_[i]) chi_[c] = static_cast<std::int8_t>(-chi_[c]);
    ++accepted_;
  }
}

void MetropolisChain::sweep() {
  for (int k = 0; k < n_; ++k) step();
}

std::uint32_t MetropolisChain::state_mask() const {
  if (n_ > 32) throw CapacityError("state_mask: N > 32");
  std::uint32_t mask = 0;
  for (int i = 0; i < n_; ++i)
    if (spins_[static_cast<std::size_t>(i)] < 0) mask |= 1U << i;
  return mask;
}

double run_chain(const DisorderRealization& realization, double beta, const ChainConfig& cfg,
                 const std::function<void(std::span<const std::int8_t>)>& on_measure) {
  cfg.validate();
  MetropolisChain chain(realization, beta, cfg.seed);
  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    chain.sweep();
    const long after = sweep + 1 - cfg.burn_in_sweeps;
    if (after > 0 && after % cfg.thinning == 0) on_measure(chain.spins());
  }
  return chain.proposed() ? static_cast<double>(chain.accepted()) / static_cast<double>(chain.proposed()) : 1.0;
}

ChainRun run_chain(const DisorderRealization& realization, double beta, const ChainConfig& cfg) {
  ChainRun out;
  out.acceptance_rate = run_chain(realization, beta, cfg, [&](std::span<const std::int8_t> spins) {
    out.samples.emplace_back(spins.begin(), spins.end());
  });
  return out;
}

double monomial_value(const ReplicaMonomial& monomial, std::span<const std::span<const std::int8_t>> replicas) {
  if (static_cast<int>(replicas.size()) < monomial.n_replicas)
    throw ValidationError("monomial_value: fewer configurations than replicas");
  double value = 1.0;
  for (const auto& f : monomial.factors) {
    const auto n = replicas[static_cast<std::size_t>(f.labels.front() - 1)].size();
    long sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int product = 1;
      for (int r : f.labels) product *= replicas[static_cast<std::size_t>(r - 1)][i];
      sum += product;
    }
    const double q = static_cast<double>(sum) / static_cast<double>(n);
    for (int e = 0; e < f.exponent; ++e) value *= q;
  }
  return value;
}

std::vector<MeanError> mc_estimate_monomials(const DisorderRealization& realization, double beta,
                                             std::span<const ReplicaMonomial> monomials, int n_chains,
                                             const ChainConfig& cfg) {
  cfg.validate();
  int replicas = 1;
  for (const auto& m : monomials) replicas = std::max(replicas, m.n_replicas);
  if (n_chains < replicas)
    throw ValidationError("mc_estimate: " + std::to_string(n_chains) + " chains for " + std::to_string(replicas) +
                          " replicas");
  const int groups = n_chains / replicas;
  std::vector<MetropolisChain> chains;
  chains.reserve(static_cast<std::size_t>(n_chains));
  for (int c = 0; c < n_chains; ++c)
    chains.emplace_back(realization, beta, derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));

  std::vector<std::vector<double>> series(monomials.size());
  for (auto& s : series) s.reserve(static_cast<std::size_t>(std::max(cfg.n_measurements(), 0L)));
  std::vector<std::span<const std::int8_t>> views(static_cast<std::size_t>(replicas));
  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    for (auto& chain : chains) chain.sweep();
    const long after = sweep + 1 - cfg.burn_in_sweeps;
    if (after <= 0 || after % cfg.thinning != 0) continue;
    for (std::size_t m = 0; m < monomials.size(); ++m) {
      double sum = 0.0;
      for (int g = 0; g < groups; ++g) {
        for (int r = 0; r < replicas; ++r)
          views[static_cast<std::size_t>(r)] = chains[static_cast<std::size_t>(g * replicas + r)].spins();
        sum += monomial_value(monomials[m], views);
      }
      series[m].push_back(sum / groups);
    }
  }
  std::vector<MeanError> out;
  for (const auto& s : series) out.push_back(blocking(s));
  return out;
}

MeanError mc_estimate_monomial(const DisorderRealization& realization, double beta,
                               const ReplicaMonomial& monomial, int n_chains, const ChainConfig& cfg) {
  return mc_estimate_monomials(realization, beta, std::span(&monomial, 1), n_chains, cfg).front();
}

}  // namespace selfavg::sampler
