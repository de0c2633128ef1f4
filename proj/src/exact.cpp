#include "selfavg/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "selfavg/errors.hpp"
#include "selfavg/kernels.hpp"

namespace selfavg::exact {

std::vector<MaskTerm> log_weight_terms(const DisorderRealization& realization, double beta) {
  std::vector<MaskTerm> terms;
  terms.reserve(realization.couplings.size());
  for (const auto& c : realization.couplings) {
    for (auto site : c.sites)
      if (site >= static_cast<std::uint32_t>(realization.n_sites))
        throw ValidationError("coupling site index out of range (corrupt realization)");
    terms.push_back({reduced_mask(c), beta * c.sign * c.strength_scale});
  }
  return terms;
}

GibbsState GibbsState::compute(int n_sites, std::span<const MaskTerm> terms, const Options& options) {
  if (n_sites < 1) throw ValidationError("exact: n_sites must be >= 1");
  if (n_sites > options.enumeration_cap || n_sites > 30)
    throw CapacityError("exact: N = " + std::to_string(n_sites) + " exceeds the enumeration cap of " +
                        std::to_string(std::min(options.enumeration_cap, 30)));
  const std::size_t size = std::size_t{1} << n_sites;
  GibbsState state;
  state.n_sites_ = n_sites;

  bool flip_symmetric = true;
  std::vector<double> log_weights(size, 0.0);
  for (const auto& term : terms) {
    if (term.mask >= size) throw ValidationError("exact: term mask out of range");
    log_weights[term.mask] += term.theta;
    if (term.theta != 0.0 && std::popcount(term.mask) % 2 != 0) flip_symmetric = false;
  }
  const auto& k = kernels::active();
  k.fwht(log_weights.data(), size);

  const double max_lw = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> table(size);
  for (std::size_t x = 0; x < size; ++x) table[x] = std::exp(log_weights[x] - max_lw);
  k.fwht(table.data(), size);

  const double total = table[0];
  const double inv = 1.0 / total;
  for (auto& v : table) v *= inv;
  table[0] = 1.0;
  if (flip_symmetric) {
    for (std::size_t s = 0; s < size; ++s)
      if (std::popcount(s) % 2 != 0) table[s] = 0.0;
  }
  state.max_log_weight_ = max_lw;
  state.log_partition_ = max_lw + std::log(total);
  state.log_weights_ = std::move(log_weights);
  state.table_ = std::move(table);
  return state;
}

GibbsState GibbsState::compute(const DisorderRealization& realization, double beta, const Options& options) {
  if (realization.n_sites > options.enumeration_cap)
    throw CapacityError("exact: N = " + std::to_string(realization.n_sites) + " exceeds the enumeration cap of " +
                        std::to_string(options.enumeration_cap));
  const auto terms = log_weight_terms(realization, beta);
  return compute(realization.n_sites, terms, options);
}

double GibbsState::correlation(std::span<const std::uint32_t> sites) const {
  std::uint32_t mask = 0;
  for (auto s : sites) {
    if (s >= static_cast<std::uint32_t>(n_sites_)) throw ValidationError("correlation: site index out of range");
    mask ^= 1U << s;
  }
  return table_[mask];
}

double GibbsState::probability(std::uint32_t x) const {
  return std::exp(log_weights_[x] - log_partition_);
}

std::vector<std::uint32_t> canonical_site_set(std::vector<std::uint32_t> sites) {
  std::sort(sites.begin(), sites.end());
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < sites.size();) {
    std::size_t j = i;
    while (j < sites.size() && sites[j] == sites[i]) ++j;
    if ((j - i) % 2 == 1) out.push_back(sites[i]);
    i = j;
  }
  return out;
}

double CorrelationTensor::at(std::vector<std::uint32_t> sites) const {
  const auto it = entries.find(canonical_site_set(std::move(sites)));
  if (it == entries.end()) throw ValidationError("CorrelationTensor: site set was not requested");
  return it->second;
}

double log_partition(const DisorderRealization& realization, double beta, const Options& options) {
  return GibbsState::compute(realization, beta, options).log_partition();
}

CorrelationTensor correlation_tensor(const DisorderRealization& realization, double beta,
                                     const std::vector<std::vector<std::uint32_t>>& site_sets,
                                     const Options& options) {
  for (const auto& set : site_sets)
    for (auto s : set)
      if (s >= static_cast<std::uint32_t>(realization.n_sites))
        throw ValidationError("correlation_tensor: requested site outside [0, N)");
  const auto state = GibbsState::compute(realization, beta, options);
  CorrelationTensor out;
  out.beta = beta;
  out.n_sites = realization.n_sites;
  out.entries[{}] = 1.0;
  for (const auto& set : site_sets) {
    auto key = canonical_site_set(set);
    out.max_degree = std::max(out.max_degree, static_cast<int>(key.size()));
    const double value = state.correlation(key);
    out.entries[std::move(key)] = value;
  }
  return out;
}

MeanError quenched_pressure(const ModelSpec& spec, int n_realizations, std::uint64_t master_seed,
                            const Options& options, int parallelism) {
  spec.validate();
  if (n_realizations < 2) throw ValidationError("quenched_pressure: n_realizations must be >= 2");
  if (spec.n_sites > options.enumeration_cap)
    throw CapacityError("exact: N = " + std::to_string(spec.n_sites) + " exceeds the enumeration cap of " +
                        std::to_string(options.enumeration_cap));
  std::vector<double> values(static_cast<std::size_t>(n_realizations));
  parallel_for(values.size(), parallelism, [&](std::size_t i) {
    const auto realization = sample_disorder(spec, derive_seed(master_seed, i));
    values[i] = log_partition(realization, spec.beta, options) / spec.n_sites;
  });
  return jackknife_mean(values);
}

}  // namespace selfavg::exact
