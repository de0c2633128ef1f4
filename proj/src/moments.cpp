#include "selfavg/moments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "selfavg/errors.hpp"
#include "selfavg/kernels.hpp"
#include "selfavg/sampler.hpp"

namespace selfavg::moments {

std::string CorrelatorSum::to_string() const {
  std::string out = "(1/N^" + std::to_string(n_variables) + ") sum";
  for (const auto& g : groups) {
    out += " w(";
    for (std::size_t i = 0; i < g.variables.size(); ++i) {
      if (i) out += ' ';
      out += "s" + std::to_string(g.variables[i]);
    }
    out += ')';
    if (g.multiplicity != 1) out += '^' + std::to_string(g.multiplicity);
  }
  return out;
}

CorrelatorSum reduce_to_correlators(const ReplicaMonomial& monomial, int n_sites, int cap) {
  if (n_sites < 1) throw ValidationError("reduce_to_correlators: n_sites must be >= 1");
  const int k = monomial.total_degree();
  if (k > cap)
    throw CapacityError("reduce_to_correlators: " + std::to_string(k) + " site indices exceed the reduction cap of " +
                        std::to_string(cap));
  // Each unit of exponent of factor f is one site variable shared by all of f's replicas.
  std::map<int, std::vector<int>> per_replica;
  int next = 0;
  for (const auto& f : monomial.factors) {
    for (int e = 0; e < f.exponent; ++e, ++next)
      for (int r : f.labels) per_replica[r].push_back(next);
  }
  std::map<std::vector<int>, int> grouped;
  for (const auto& [replica, vars] : per_replica) ++grouped[vars];
  CorrelatorSum out;
  out.n_sites = n_sites;
  out.n_variables = k;
  for (const auto& [vars, mult] : grouped) out.groups.push_back({vars, mult});
  return out;
}

double evaluate(const CorrelatorSum& sum, const exact::GibbsState& state) {
  if (state.n_sites() != sum.n_sites)
    throw ValidationError("evaluate: reduction built for N=" + std::to_string(sum.n_sites) + " but state has N=" +
                          std::to_string(state.n_sites()));
  const int k = sum.n_variables;
  if (k == 0) return 1.0;
  const auto table = state.table();
  const std::size_t n = static_cast<std::size_t>(state.n_sites());

  // The variable touching the most groups is summed innermost by the gather kernel.
  std::vector<int> touches(static_cast<std::size_t>(k), 0);
  for (const auto& g : sum.groups)
    for (int v : g.variables) ++touches[static_cast<std::size_t>(v)];
  const int last = static_cast<int>(std::max_element(touches.begin(), touches.end()) - touches.begin());

  std::vector<std::size_t> inner, outer;
  std::vector<int> inner_exp;
  for (std::size_t g = 0; g < sum.groups.size(); ++g) {
    const auto& vars = sum.groups[g].variables;
    if (std::find(vars.begin(), vars.end(), last) != vars.end()) {
      inner.push_back(g);
      inner_exp.push_back(sum.groups[g].multiplicity);
    } else {
      outer.push_back(g);
    }
  }
  std::vector<int> free_vars;
  for (int v = 0; v < k; ++v)
    if (v != last) free_vars.push_back(v);

  // membership[v] lists the groups whose mask flips when variable v moves.
  std::vector<std::vector<std::size_t>> membership(static_cast<std::size_t>(k));
  for (std::size_t g = 0; g < sum.groups.size(); ++g)
    for (int v : sum.groups[g].variables) membership[static_cast<std::size_t>(v)].push_back(g);

  const auto& kern = kernels::active();
  std::vector<std::uint32_t> masks(sum.groups.size(), 0);
  std::vector<std::uint32_t> bases(inner.size());
  double total = 0.0;

  auto leaf = [&]() {
    double c = 1.0;
    for (auto g : outer) {
      const double v = table[masks[g]];
      c *= std::pow(v, sum.groups[g].multiplicity);
    }
    if (c == 0.0) return;
    for (std::size_t j = 0; j < inner.size(); ++j) bases[j] = masks[inner[j]];
    total += c * kern.gather_product_sum(table.data(), bases.data(), inner_exp.data(), inner.size(), n);
  };
  auto recurse = [&](auto& self, std::size_t depth) -> void {
    if (depth == free_vars.size()) {
      leaf();
      return;
    }
    const auto& groups = membership[static_cast<std::size_t>(free_vars[depth])];
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bit = 1U << i;
      for (auto g : groups) masks[g] ^= bit;
      self(self, depth + 1);
      for (auto g : groups) masks[g] ^= bit;
    }
  };
  recurse(recurse, 0);
  return total / std::pow(static_cast<double>(n), k);
}

double replica_average(const ReplicaMonomial& monomial, const exact::GibbsState& state, int cap) {
  return evaluate(reduce_to_correlators(monomial, state.n_sites(), cap), state);
}

OverlapEstimate estimate(const ReplicaMonomial& monomial, const ModelSpec& spec, const quench::EnsembleSpec& ens) {
  spec.validate();
  ens.validate();
  OverlapEstimate out;
  out.n_realizations = ens.n_realizations;
  if (ens.backend == quench::Backend::exact) {
    if (spec.n_sites > ens.exact.enumeration_cap)
      throw CapacityError("exact: N = " + std::to_string(spec.n_sites) + " exceeds the enumeration cap of " +
                          std::to_string(ens.exact.enumeration_cap));
    const auto reduction = reduce_to_correlators(monomial, spec.n_sites, ens.reduction_cap);
    const auto rows = quench::collect(spec, ens, [&](const DisorderRealization& r, std::size_t) {
      const auto state = exact::GibbsState::compute(r, spec.beta, ens.exact);
      return std::vector<double>{evaluate(reduction, state)};
    });
    std::vector<double> values;
    for (const auto& row : rows) values.push_back(row[0]);
    const auto jk = jackknife_mean(values);
    out.value = jk.mean;
    out.stderr = out.disorder_stderr = jk.stderr;
    return out;
  }

  const int chains = ens.n_chains > 0 ? ens.n_chains : std::max(monomial.n_replicas, 1);
  const auto rows = quench::collect(spec, ens, [&](const DisorderRealization& r, std::size_t) {
    auto cfg = ens.chain;
    cfg.seed = derive_seed(r.seed, 0x6d63ULL);
    const auto est = sampler::mc_estimate_monomial(r, spec.beta, monomial, chains, cfg);
    return std::vector<double>{est.mean, est.stderr};
  });
  std::vector<double> values;
  double chain_var = 0.0;
  for (const auto& row : rows) {
    values.push_back(row[0]);
    chain_var += row[1] * row[1];
  }
  const double n = static_cast<double>(rows.size());
  const auto jk = jackknife_mean(values);
  out.value = jk.mean;
  out.disorder_stderr = jk.stderr;
  out.chain_stderr = std::sqrt(chain_var) / n;
  out.stderr = std::sqrt(jk.stderr * jk.stderr + out.chain_stderr * out.chain_stderr);
  return out;
}

}  // namespace selfavg::moments
