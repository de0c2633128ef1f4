#pragma once

#include <string>
#include <vector>

#include "selfavg/exact.hpp"
#include "selfavg/model.hpp"
#include "selfavg/monomial.hpp"
#include "selfavg/quench.hpp"

namespace selfavg::moments {

/// Replicas whose spin products run over the same site variables; the group
/// contributes omega(prod_{v in variables} sigma_{i_v})^multiplicity.
struct CorrelatorGroup {
  std::vector<int> variables;
  int multiplicity = 1;

  bool operator==(const CorrelatorGroup&) const = default;
};

/// Omega(monomial) = (1/N^k) sum_{i_0..i_{k-1}} prod_groups omega(sigma_{S_g})^{m_g},
/// where S_g is the mod-2 reduction of {i_v : v in variables_g}.
struct CorrelatorSum {
  int n_sites = 0;
  int n_variables = 0;
  std::vector<CorrelatorGroup> groups;

  std::string to_string() const;
};

inline constexpr int default_reduction_cap = 6;

/// Throws CapacityError when the total site-index count exceeds `cap`.
CorrelatorSum reduce_to_correlators(const ReplicaMonomial& monomial, int n_sites, int cap = default_reduction_cap);

/// Omega(monomial) for one realization from its correlator table.
double evaluate(const CorrelatorSum& sum, const exact::GibbsState& state);

/// Convenience: reduce and evaluate.
double replica_average(const ReplicaMonomial& monomial, const exact::GibbsState& state,
                       int cap = default_reduction_cap);

struct OverlapEstimate {
  double value = 0.0;
  double stderr = 0.0;
  /// Disorder-only part of the error and, for mc, the mean chain error.
  double disorder_stderr = 0.0;
  double chain_stderr = 0.0;
  int n_realizations = 0;
};

/// Quenched average <monomial> = E Omega(monomial) over the ensemble.
OverlapEstimate estimate(const ReplicaMonomial& monomial, const ModelSpec& spec, const quench::EnsembleSpec& ens);

}  // namespace selfavg::moments
