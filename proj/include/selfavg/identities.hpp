#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfavg/exact.hpp"
#include "selfavg/model.hpp"
#include "selfavg/monomial.hpp"
#include "selfavg/quench.hpp"

namespace selfavg::identities {

enum class IdentityId {
  gg,
  gg_pair,
  first_family,
  four_overlap,
  magnetization_sa,
  stochastic_stability,
  factorization,
  pressure_derivative,
};

const char* identity_name(IdentityId id);
IdentityId parse_identity(const std::string& name);

/// Bounded test function of replicas 1..s: the constant 1 or a product of overlaps.
struct PhiSpec {
  int s = 1;
  LabeledMonomial monomial;

  static PhiSpec one(int s) { return {s, {}}; }
  /// "one" / "1" or monomial text such as "q{1,2}^2*q{1,3}^2".
  static PhiSpec parse(const std::string& text, int s);

  bool is_one() const { return monomial.is_constant(); }
  std::string descriptor() const { return is_one() ? "one" : monomial.to_string(); }
  void validate() const;
};

/// {1, q12^2, q12^2 q13^2, q12^2 q34^2}, keeping the entries that live on s replicas.
std::vector<PhiSpec> default_phi_dictionary(int s);

struct IdentityReport {
  IdentityId id = IdentityId::gg;
  /// Overrides the catalog name in serialized output (experimental probes).
  std::string label;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  /// Largest |coefficient * term| entering either side.
  double scale = 0.0;
  double normalized_residual = 0.0;
  double stderr = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  int n_realizations = 0;
  std::uint64_t seed = 0;
  /// Additional named quantities (secondary comparisons, diagnostics).
  nlohmann::ordered_json extras = nlohmann::ordered_json::object();

  quench::ResidualSummary summary() const { return {lhs, rhs, residual, normalized_residual, stderr}; }
  nlohmann::ordered_json to_json() const;
};

/// Averages of overlap monomials combined linearly: each term is
/// coefficient * prod of quenched averages of its columns, placed on one side.
/// A term with one column is <M>; with two columns it is <A><B>.
class LinearIdentity {
 public:
  struct Term {
    double coefficient = 0.0;
    std::vector<std::size_t> columns;
    bool on_lhs = true;
  };

  void add(double coefficient, const LabeledMonomial& monomial, bool on_lhs);
  void add_product(double coefficient, const LabeledMonomial& a, const LabeledMonomial& b, bool on_lhs);

  const std::vector<ReplicaMonomial>& columns() const { return columns_; }
  const std::vector<Term>& terms() const { return terms_; }

  /// Per-realization column values Omega(M) from a Gibbs state.
  std::vector<double> column_values(const exact::GibbsState& state, int cap = 6) const;
  /// (lhs, rhs, scale) from column means (or from one realization's values).
  std::vector<double> combine(std::span<const double> column_means) const;

 private:
  std::size_t column(const LabeledMonomial& m);
  std::vector<ReplicaMonomial> columns_;
  std::vector<Term> terms_;
};

/// Options shared by every evaluator.
struct EvalOptions {
  /// Evaluate the overlap identities under the measure that includes the
  /// spec's perturbations (default: the unperturbed measure).
  bool perturbed_measure = false;
};

LinearIdentity gg_terms(int s, int a, const PhiSpec& phi);
LinearIdentity gg_pair_terms(int s, const PhiSpec& phi);
LinearIdentity first_family_terms(int r, int s, int pow_r, int pow_s);
LinearIdentity four_overlap_terms(int s, const PhiSpec& phi);
LinearIdentity magnetization_terms();

/// Evaluates a linear identity over the ensemble with common random numbers.
IdentityReport evaluate(const LinearIdentity& identity, IdentityId id, const ModelSpec& spec,
                        const quench::EnsembleSpec& ens, const EvalOptions& options = {});

IdentityReport gg_residual(int s, int a, const PhiSpec& phi, const ModelSpec& spec, const quench::EnsembleSpec& ens,
                           const EvalOptions& options = {});
IdentityReport gg_pair_residual(int s, const PhiSpec& phi, const ModelSpec& spec, const quench::EnsembleSpec& ens,
                                const EvalOptions& options = {});
IdentityReport first_family_residual(int r, int s, int pow_r, int pow_s, const ModelSpec& spec,
                                     const quench::EnsembleSpec& ens, const EvalOptions& options = {});
IdentityReport four_overlap_residual(int s, const PhiSpec& phi, const ModelSpec& spec,
                                     const quench::EnsembleSpec& ens, const EvalOptions& options = {});
/// E{Omega(m^2) - Omega(m)^2} under the measure including the spec's perturbations.
IdentityReport magnetization_sa_residual(const ModelSpec& spec, const quench::EnsembleSpec& ens);

/// Per-realization pieces of the one-link perturbation identities.
struct LinkPerturbation {
  double alpha_prime = 0.0;
  double beta_prime = 0.0;
};

/// Largest Poisson count kept so that the retained mass is >= 1 - 1e-10.
int poisson_truncation(double mean, double tail = 1e-10);

/// sum_{n>=1} t^{2n}/(2n) (1 - <q_{2n}^2>) with <q_{2n}^2> = E_ij omega(s_i s_j)^{2n}
/// on one realization; stops when t^{2n}/(2n) < 1e-12 and throws
/// ValidationError when that needs more than `max_terms` terms.
double link_series(const exact::GibbsState& state, double t, int max_terms = 2000);

/// E_{J, sites} ln omega(exp(beta' sum_{nu<m} J_nu s_i s_j)) for m links on one
/// realization. m <= 2 is exact; larger m averages `samples` random link sets
/// using the factorized single-link value as a control variate.
double link_log_expectation(const exact::GibbsState& state, int m, double beta_prime, std::uint64_t seed,
                            int samples = 256);

IdentityReport stochastic_stability_residual(const ModelSpec& spec, const LinkPerturbation& perturbation,
                                             const quench::EnsembleSpec& ens);

IdentityReport factorization_residual(const ModelSpec& spec, double beta_prime_1, double beta_prime_2,
                                      const quench::EnsembleSpec& ens, const EvalOptions& options = {});

/// Extensive E ln Z of the measure perturbed by Poisson(alpha') links of
/// strength beta'. alpha' defaults to the spec's first perturbation rate,
/// then to alpha.
IdentityReport pressure_derivative_check(const ModelSpec& spec, double beta_prime, const quench::EnsembleSpec& ens,
                                         double alpha_prime = -1.0);

/// Experimental probe of the order-2n energy identity: evaluates the full term
/// list and separately the part made of overlaps below the top size.
IdentityReport order_probe(int order_2n, int s, const PhiSpec& phi, const ModelSpec& spec,
                           const quench::EnsembleSpec& ens);

}  // namespace selfavg::identities
