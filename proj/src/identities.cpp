#include "selfavg/identities.hpp"

#include <algorithm>
#include <cmath>

#include "selfavg/errors.hpp"
#include "selfavg/expansion.hpp"
#include "selfavg/moments.hpp"
#include "selfavg/sampler.hpp"

namespace selfavg::identities {

namespace {

constexpr const char* kNames[] = {"gg",           "gg_pair",      "first_family",         "four_overlap",
                                  "magnetization_sa", "stochastic_stability", "factorization", "pressure_derivative"};

// Stream tags for randomness drawn inside one realization.
constexpr std::uint64_t kChainStream = 0x6d63;
constexpr std::uint64_t kLinkStream = 0x6c6b;
constexpr std::uint64_t kPerturbationStream = 0x7072;

double normalized(double residual, double scale) { return residual / std::max(scale, 1e-300); }

void require_exact(const quench::EnsembleSpec& ens, const char* what) {
  if (ens.backend != quench::Backend::exact)
    throw ValidationError(std::string(what) + " requires the exact backend (ensemble.backend = exact)");
}

void check_enumeration(const ModelSpec& spec, const quench::EnsembleSpec& ens) {
  if (spec.n_sites > ens.exact.enumeration_cap)
    throw CapacityError("exact: N = " + std::to_string(spec.n_sites) + " exceeds the enumeration cap of " +
                        std::to_string(ens.exact.enumeration_cap));
}

/// Pair masks mask(i, j) = bit(i) ^ bit(j), row-major over i, j.
std::vector<std::uint32_t> pair_masks(int n) {
  std::vector<std::uint32_t> m;
  m.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.push_back((1U << i) ^ (1U << j));
  return m;
}

// E_J ln(1 + t J w) for J = +-1.
double single_link_log(double t, double w) { return 0.5 * (std::log1p(t * w) + std::log1p(-t * w)); }

double mean_single_link_log(const exact::GibbsState& state, const std::vector<std::uint32_t>& masks, double t) {
  double sum = 0.0;
  for (auto m : masks) sum += single_link_log(t, state.correlation(m));
  return sum / static_cast<double>(masks.size());
}

IdentityReport report_from_rows(IdentityId id, const std::vector<std::vector<double>>& rows,
                                const quench::EnsembleSpec& ens,
                                const std::function<std::vector<double>(std::span<const double>)>& statistic,
                                double scale) {
  const auto est = jackknife(rows, statistic);
  IdentityReport r;
  r.id = id;
  r.lhs = est[0].mean;
  r.rhs = est[1].mean;
  r.residual = est[2].mean;
  r.lhs_stderr = est[0].stderr;
  r.rhs_stderr = est[1].stderr;
  r.stderr = est[2].stderr;
  r.scale = scale;
  r.normalized_residual = normalized(r.residual, scale);
  r.n_realizations = ens.n_realizations;
  r.seed = ens.master_seed;
  return r;
}

void common_params(IdentityReport& r, const ModelSpec& spec, const quench::EnsembleSpec& ens) {
  r.params["N"] = spec.n_sites;
  r.params["alpha"] = spec.alpha;
  r.params["beta"] = spec.beta;
  r.params["backend"] = quench::backend_name(ens.backend);
}

}  // namespace

const char* identity_name(IdentityId id) { return kNames[static_cast<int>(id)]; }

IdentityId parse_identity(const std::string& name) {
  for (int i = 0; i < 8; ++i)
    if (name == kNames[i]) return static_cast<IdentityId>(i);
  throw ValidationError("task.identity: unknown identity '" + name + "'");
}

PhiSpec PhiSpec::parse(const std::string& text, int s) {
  PhiSpec phi{s, {}};
  if (text != "one" && text != "1") phi.monomial = parse_monomial(text);
  phi.validate();
  return phi;
}

void PhiSpec::validate() const {
  if (s < 1) throw ValidationError("phi: s must be >= 1");
  if (monomial.max_label() > s)
    throw ValidationError("phi: " + monomial.to_string() + " uses replica " + std::to_string(monomial.max_label()) +
                          " outside 1.." + std::to_string(s));
}

std::vector<PhiSpec> default_phi_dictionary(int s) {
  std::vector<PhiSpec> out{PhiSpec::one(s)};
  for (const char* text : {"q{1,2}^2", "q{1,2}^2*q{1,3}^2", "q{1,2}^2*q{3,4}^2"}) {
    const auto m = parse_monomial(text);
    if (m.max_label() <= s) out.push_back({s, m});
  }
  return out;
}

nlohmann::ordered_json IdentityReport::to_json() const {
  nlohmann::ordered_json j;
  j["identity_id"] = label.empty() ? identity_name(id) : label;
  j["params"] = params;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["residual"] = residual;
  j["normalized_residual"] = normalized_residual;
  j["stderr"] = stderr;
  j["n_realizations"] = n_realizations;
  j["seed"] = seed;
  j["scale"] = scale;
  j["lhs_stderr"] = lhs_stderr;
  j["rhs_stderr"] = rhs_stderr;
  j["extras"] = extras;
  return j;
}

std::size_t LinearIdentity::column(const LabeledMonomial& m) {
  const auto c = canonicalize(m);
  const auto it = std::find(columns_.begin(), columns_.end(), c);
  if (it != columns_.end()) return static_cast<std::size_t>(it - columns_.begin());
  columns_.push_back(c);
  return columns_.size() - 1;
}

void LinearIdentity::add(double coefficient, const LabeledMonomial& monomial, bool on_lhs) {
  terms_.push_back({coefficient, {column(monomial)}, on_lhs});
}

void LinearIdentity::add_product(double coefficient, const LabeledMonomial& a, const LabeledMonomial& b,
                                 bool on_lhs) {
  terms_.push_back({coefficient, {column(a), column(b)}, on_lhs});
}

std::vector<double> LinearIdentity::column_values(const exact::GibbsState& state, int cap) const {
  std::vector<double> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(moments::replica_average(c, state, cap));
  return out;
}

std::vector<double> LinearIdentity::combine(std::span<const double> means) const {
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (const auto& t : terms_) {
    double v = t.coefficient;
    for (auto c : t.columns) v *= means[c];
    (t.on_lhs ? lhs : rhs) += v;
    scale = std::max(scale, std::abs(v));
  }
  return {lhs, rhs, scale};
}

LinearIdentity gg_terms(int s, int a, const PhiSpec& phi) {
  if (s < 1 || a < 1 || a > s) throw ValidationError("gg: need 1 <= a <= s");
  phi.validate();
  LinearIdentity id;
  id.add(1.0, overlap({a, s + 1}) * phi.monomial, true);
  id.add_product(1.0 / s, overlap({1, 2}), phi.monomial, false);
  for (int b = 1; b <= s; ++b)
    if (b != a) id.add(1.0 / s, overlap({a, b}) * phi.monomial, false);
  return id;
}

LinearIdentity gg_pair_terms(int s, const PhiSpec& phi) {
  if (s < 1) throw ValidationError("gg_pair: s must be >= 1");
  phi.validate();
  LinearIdentity id;
  id.add(1.0, overlap({s + 1, s + 2}) * phi.monomial, true);
  id.add_product(2.0 / (s + 1), overlap({1, 2}), phi.monomial, false);
  for (int a = 1; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) id.add(2.0 / (s * (s + 1)), overlap({a, b}) * phi.monomial, false);
  return id;
}

LinearIdentity first_family_terms(int r, int s, int pow_r, int pow_s) {
  if (pow_r < 1 || pow_s < 1) throw ValidationError("first_family: powers must be >= 1");
  LinearIdentity id;
  for (const auto& c : expansion::first_family_terms(r, s))
    id.add(series::to_double(c.coefficient), shared_pattern(r, s, c.a, pow_r, pow_s).labeled(), true);
  return id;
}

LinearIdentity four_overlap_terms(int s, const PhiSpec& phi) {
  if (s < 1) throw ValidationError("four_overlap: s must be >= 1");
  phi.validate();
  const auto& f = phi.monomial;
  LinearIdentity id;
  const double ds = s;
  id.add(ds * (ds + 1) * (ds + 2) / 6.0, overlap({1, s + 1, s + 2, s + 3}) * f, true);
  for (int a = 2; a <= s; ++a) id.add(-ds * (ds + 1) / 2.0, overlap({1, a, s + 1, s + 2}) * f, true);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) id.add(ds, overlap({1, a, b, s + 1}) * f, true);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b)
      for (int c = b + 1; c <= s; ++c) id.add(-1.0, overlap({1, a, b, c}) * f, true);
  id.add_product(1.0, overlap({1, 2, 3, 4}), f, false);
  return id;
}

LinearIdentity magnetization_terms() {
  LinearIdentity id;
  id.add(1.0, overlap({1}, 2), true);
  id.add(-1.0, parse_monomial("q{1}*q{2}"), true);
  return id;
}

IdentityReport evaluate(const LinearIdentity& identity, IdentityId id, const ModelSpec& spec,
                        const quench::EnsembleSpec& ens, const EvalOptions& options) {
  const ModelSpec measure = options.perturbed_measure ? spec : spec.without_perturbations();
  measure.validate();
  ens.validate();
  const auto& columns = identity.columns();
  std::vector<std::vector<double>> rows;
  if (ens.backend == quench::Backend::exact) {
    check_enumeration(measure, ens);
    std::vector<moments::CorrelatorSum> reductions;
    for (const auto& c : columns)
      reductions.push_back(moments::reduce_to_correlators(c, measure.n_sites, ens.reduction_cap));
    rows = quench::collect(measure, ens, [&](const DisorderRealization& r, std::size_t) {
      const auto state = exact::GibbsState::compute(r, measure.beta, ens.exact);
      std::vector<double> values;
      for (const auto& red : reductions) values.push_back(moments::evaluate(red, state));
      return values;
    });
  } else {
    int replicas = 1;
    for (const auto& c : columns) replicas = std::max(replicas, c.n_replicas);
    const int chains = ens.n_chains > 0 ? ens.n_chains : replicas;
    rows = quench::collect(measure, ens, [&](const DisorderRealization& r, std::size_t) {
      auto cfg = ens.chain;
      cfg.seed = derive_seed(r.seed, kChainStream);
      std::vector<double> values;
      for (const auto& e : sampler::mc_estimate_monomials(r, measure.beta, columns, chains, cfg))
        values.push_back(e.mean);
      return values;
    });
  }
  auto statistic = [&](std::span<const double> means) {
    const auto c = identity.combine(means);
    return std::vector<double>{c[0], c[1], c[0] - c[1]};
  };
  std::vector<double> means(columns.size(), 0.0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) means[c] += row[c];
  for (auto& m : means) m /= static_cast<double>(rows.size());
  auto report = report_from_rows(id, rows, ens, statistic, identity.combine(means)[2]);
  common_params(report, spec, ens);
  report.params["measure"] = options.perturbed_measure ? "perturbed" : "unperturbed";
  return report;
}

IdentityReport gg_residual(int s, int a, const PhiSpec& phi, const ModelSpec& spec, const quench::EnsembleSpec& ens,
                           const EvalOptions& options) {
  auto r = evaluate(gg_terms(s, a, phi), IdentityId::gg, spec, ens, options);
  r.params["s"] = s;
  r.params["a"] = a;
  r.params["phi"] = phi.descriptor();
  return r;
}

IdentityReport gg_pair_residual(int s, const PhiSpec& phi, const ModelSpec& spec, const quench::EnsembleSpec& ens,
                                const EvalOptions& options) {
  auto r = evaluate(gg_pair_terms(s, phi), IdentityId::gg_pair, spec, ens, options);
  r.params["s"] = s;
  r.params["phi"] = phi.descriptor();
  return r;
}

IdentityReport first_family_residual(int r_, int s, int pow_r, int pow_s, const ModelSpec& spec,
                                     const quench::EnsembleSpec& ens, const EvalOptions& options) {
  auto r = evaluate(first_family_terms(r_, s, pow_r, pow_s), IdentityId::first_family, spec, ens, options);
  r.params["r"] = r_;
  r.params["s"] = s;
  r.params["pow_r"] = pow_r;
  r.params["pow_s"] = pow_s;
  return r;
}

IdentityReport four_overlap_residual(int s, const PhiSpec& phi, const ModelSpec& spec,
                                     const quench::EnsembleSpec& ens, const EvalOptions& options) {
  auto r = evaluate(four_overlap_terms(s, phi), IdentityId::four_overlap, spec, ens, options);
  r.params["s"] = s;
  r.params["phi"] = phi.descriptor();
  return r;
}

IdentityReport magnetization_sa_residual(const ModelSpec& spec, const quench::EnsembleSpec& ens) {
  auto r = evaluate(magnetization_terms(), IdentityId::magnetization_sa, spec, ens, {true});
  nlohmann::ordered_json perts = nlohmann::ordered_json::array();
  for (const auto& p : spec.perturbations)
    perts.push_back({{"arity", p.arity}, {"rate", p.rate}, {"strength", p.strength}, {"weight", p.weight}});
  r.params["perturbations"] = perts;
  return r;
}

int poisson_truncation(double mean, double tail) {
  if (mean < 0.0) throw ValidationError("poisson_truncation: mean must be >= 0");
  if (mean == 0.0) return 0;
  double p = std::exp(-mean), cumulative = p;
  int m = 0;
  while (cumulative < 1.0 - tail) {
    ++m;
    p *= mean / m;
    cumulative += p;
    if (m > 10000) throw CapacityError("poisson_truncation: mean too large");
  }
  return m;
}

double link_series(const exact::GibbsState& state, double t, int max_terms) {
  if (t == 0.0) return 0.0;
  const auto masks = pair_masks(state.n_sites());
  std::vector<double> w2;
  for (auto m : masks) {
    const double w = state.correlation(m);
    w2.push_back(w * w);
  }
  std::vector<double> power(w2.size(), 1.0);
  const double t2 = t * t;
  double t2n = 1.0, sum = 0.0;
  for (int n = 1;; ++n) {
    if (n > max_terms)
      throw ValidationError("link series: more than " + std::to_string(max_terms) +
                            " terms needed; tail bound t^2n/(2n(1-t^2)) = " +
                            std::to_string(t2n / (2.0 * n * (1.0 - t2))) + " for t = " + std::to_string(t));
    t2n *= t2;
    double q2n = 0.0;
    for (std::size_t k = 0; k < w2.size(); ++k) {
      power[k] *= w2[k];
      q2n += power[k];
    }
    q2n /= static_cast<double>(w2.size());
    const double weight = t2n / (2.0 * n);
    sum += weight * (1.0 - q2n);
    if (weight < 1e-12) break;
  }
  return sum;
}

double link_log_expectation(const exact::GibbsState& state, int m, double beta_prime, std::uint64_t seed,
                            int samples) {
  if (m < 0) throw ValidationError("link_log_expectation: m must be >= 0");
  if (m == 0 || beta_prime == 0.0) return 0.0;
  const int n = state.n_sites();
  const double t = std::tanh(beta_prime);
  const double log_cosh = std::log(std::cosh(beta_prime));
  const auto masks = pair_masks(n);
  const double one_link = mean_single_link_log(state, masks, t);
  if (m == 1) return log_cosh + one_link;
  if (m == 2) {
    double sum = 0.0;
    for (auto m1 : masks) {
      const double w1 = state.correlation(m1);
      for (auto m2 : masks) {
        const double w2 = state.correlation(m2);
        const double w12 = state.correlation(m1 ^ m2);
        for (int j1 : {1, -1})
          for (int j2 : {1, -1}) sum += std::log(1.0 + t * j1 * w1 + t * j2 * w2 + t * t * j1 * j2 * w12);
      }
    }
    return 2.0 * log_cosh + sum / (4.0 * static_cast<double>(masks.size()) * static_cast<double>(masks.size()));
  }
  if (m > 20) throw CapacityError("link_log_expectation: more than 20 simultaneous links");
  Rng rng(seed);
  std::vector<std::uint32_t> link(static_cast<std::size_t>(m));
  std::vector<int> sign(static_cast<std::size_t>(m));
  double diff = 0.0;
  for (int k = 0; k < samples; ++k) {
    double factorized = 0.0;
    for (int nu = 0; nu < m; ++nu) {
      const auto i = rng.below(static_cast<std::uint64_t>(n));
      const auto j = rng.below(static_cast<std::uint64_t>(n));
      link[static_cast<std::size_t>(nu)] = (1U << i) ^ (1U << j);
      sign[static_cast<std::size_t>(nu)] = rng.sign();
      factorized += std::log1p(t * sign[static_cast<std::size_t>(nu)] * state.correlation(link[static_cast<std::size_t>(nu)]));
    }
    // omega(prod_nu (1 + t J_nu s s)) = sum over link subsets B of t^|B| J_B omega(s_B).
    double total = 0.0;
    for (std::uint32_t b = 0; b < (1U << m); ++b) {
      std::uint32_t mask = 0;
      double coef = 1.0;
      for (int nu = 0; nu < m; ++nu) {
        if (b >> nu & 1U) {
          mask ^= link[static_cast<std::size_t>(nu)];
          coef *= t * sign[static_cast<std::size_t>(nu)];
        }
      }
      total += coef * state.correlation(mask);
    }
    diff += std::log(total) - factorized;
  }
  return m * log_cosh + m * one_link + diff / samples;
}

IdentityReport stochastic_stability_residual(const ModelSpec& spec, const LinkPerturbation& perturbation,
                                             const quench::EnsembleSpec& ens) {
  require_exact(ens, "stochastic_stability");
  if (perturbation.alpha_prime < 0.0) throw ValidationError("stochastic_stability: alpha' must be >= 0");
  const ModelSpec measure = spec.without_perturbations();
  check_enumeration(measure, ens);
  const double ap = perturbation.alpha_prime, bp = perturbation.beta_prime;
  const double t = std::tanh(bp);
  const int m_max = poisson_truncation(ap);
  std::vector<double> weights(static_cast<std::size_t>(m_max) + 1);
  for (int m = 0; m <= m_max; ++m) weights[static_cast<std::size_t>(m)] = std::exp(-ap + m * std::log(std::max(ap, 1e-300)) - std::lgamma(m + 1.0));
  const double w3 = m_max >= 3 ? weights[3] : 1.0;

  const auto rows = quench::collect(measure, ens, [&](const DisorderRealization& r, std::size_t) {
    const auto state = exact::GibbsState::compute(r, measure.beta, ens.exact);
    double lhs = 0.0;
    for (int m = 1; m <= m_max; ++m) {
      const int samples = std::max(8, static_cast<int>(std::lround(256.0 * weights[static_cast<std::size_t>(m)] / w3)));
      lhs += weights[static_cast<std::size_t>(m)] *
             link_log_expectation(state, m, bp, derive_seed(derive_seed(r.seed, kLinkStream), static_cast<std::uint64_t>(m)), samples);
    }
    const double rhs = ap * link_series(state, t);
    return std::vector<double>{lhs, rhs};
  });
  auto statistic = [](std::span<const double> m) { return std::vector<double>{m[0], m[1], m[0] - m[1]}; };
  std::vector<double> means{0.0, 0.0};
  for (const auto& row : rows) {
    means[0] += row[0];
    means[1] += row[1];
  }
  const double scale = std::max(std::abs(means[0]), std::abs(means[1])) / static_cast<double>(rows.size());
  auto report = report_from_rows(IdentityId::stochastic_stability, rows, ens, statistic, scale);
  common_params(report, spec, ens);
  report.params["alpha_prime"] = ap;
  report.params["beta_prime"] = bp;
  report.extras["poisson_truncation"] = m_max;
  report.extras["sampled_link_counts_from"] = 3;
  return report;
}

IdentityReport factorization_residual(const ModelSpec& spec, double beta_prime_1, double beta_prime_2,
                                      const quench::EnsembleSpec& ens, const EvalOptions& options) {
  require_exact(ens, "factorization");
  const ModelSpec measure = options.perturbed_measure ? spec : spec.without_perturbations();
  check_enumeration(measure, ens);
  const double t1 = std::tanh(beta_prime_1), t2 = std::tanh(beta_prime_2);
  const double lc1 = std::log(std::cosh(beta_prime_1)), lc2 = std::log(std::cosh(beta_prime_2));
  const auto rows = quench::collect(measure, ens, [&](const DisorderRealization& r, std::size_t) {
    const auto state = exact::GibbsState::compute(r, measure.beta, ens.exact);
    const auto masks = pair_masks(state.n_sites());
    const double single1 = lc1 + mean_single_link_log(state, masks, t1);
    const double single2 = lc2 + mean_single_link_log(state, masks, t2);
    const double norm = static_cast<double>(masks.size()) * static_cast<double>(masks.size());
    double joint = 0.0, connected = 0.0;
    for (auto m1 : masks) {
      const double w1 = state.correlation(m1);
      for (auto m2 : masks) {
        const double w2 = state.correlation(m2);
        const double w12 = state.correlation(m1 ^ m2);
        connected += w12 - w1 * w2;
        if (t1 == 0.0 || t2 == 0.0) continue;
        for (int j1 : {1, -1})
          for (int j2 : {1, -1}) joint += std::log(1.0 + t1 * j1 * w1 + t2 * j2 * w2 + t1 * t2 * j1 * j2 * w12);
      }
    }
    // With one vanishing strength the joint term is exactly the other single-link term.
    const double lhs = (t1 == 0.0 || t2 == 0.0) ? single1 + single2 : lc1 + lc2 + joint / (4.0 * norm);
    return std::vector<double>{lhs, single1 + single2, connected / norm};
  });
  auto statistic = [](std::span<const double> m) { return std::vector<double>{m[0], m[1], m[0] - m[1], m[2]}; };
  const auto est = jackknife(rows, statistic);
  double scale = std::max(std::abs(est[0].mean), std::abs(est[1].mean));
  auto report = report_from_rows(IdentityId::factorization, rows, ens, statistic, scale);
  common_params(report, spec, ens);
  report.params["beta_prime_1"] = beta_prime_1;
  report.params["beta_prime_2"] = beta_prime_2;
  report.params["measure"] = options.perturbed_measure ? "perturbed" : "unperturbed";
  report.extras["connected_link_correlation"] = est[3].mean;
  report.extras["connected_link_correlation_stderr"] = est[3].stderr;
  return report;
}

IdentityReport pressure_derivative_check(const ModelSpec& spec, double beta_prime, const quench::EnsembleSpec& ens,
                                         double alpha_prime) {
  require_exact(ens, "pressure_derivative");
  const ModelSpec base = spec.without_perturbations();
  check_enumeration(base, ens);
  if (alpha_prime < 0.0) alpha_prime = spec.perturbations.empty() ? spec.alpha : spec.perturbations.front().rate;
  const double ap = alpha_prime;
  const double t = std::tanh(beta_prime);
  constexpr double h = 1e-4;

  const auto rows = quench::collect(base, ens, [&](const DisorderRealization& r, std::size_t) {
    const int n = r.n_sites;
    const auto base_terms = exact::log_weight_terms(r, base.beta);
    Rng rng(derive_seed(r.seed, kPerturbationStream));
    const auto links = static_cast<int>(rng.poisson(ap));
    std::vector<std::uint32_t> link_mask;
    std::vector<int> link_sign;
    for (int nu = 0; nu < links; ++nu) {
      const auto i = rng.below(static_cast<std::uint64_t>(n));
      const auto j = rng.below(static_cast<std::uint64_t>(n));
      link_mask.push_back((1U << i) ^ (1U << j));
      link_sign.push_back(rng.sign());
    }
    auto terms_for = [&](double b, int flip, int skip) {
      auto terms = base_terms;
      for (int nu = 0; nu < links; ++nu)
        if (nu != skip) terms.push_back({link_mask[static_cast<std::size_t>(nu)], b * flip * link_sign[static_cast<std::size_t>(nu)]});
      return terms;
    };
    // Antithetic average over the global sign of the perturbation couplings.
    auto pressure = [&](double b) {
      double sum = 0.0;
      for (int flip : {1, -1}) sum += exact::GibbsState::compute(n, terms_for(b, flip, -1), ens.exact).log_partition();
      return 0.5 * sum;
    };
    auto central = [&](double step) { return (pressure(beta_prime + step) - pressure(beta_prime - step)) / (2.0 * step); };
    const double d1 = central(h), d2 = central(h / 2.0);
    const double derivative = (4.0 * d2 - d1) / 3.0;
    const double flagged = std::abs(d1 - d2) > std::max(1e-6, 1e-4 * std::abs(derivative)) ? 1.0 : 0.0;

    double exact_rhs = 0.0;
    for (int flip : {1, -1}) {
      for (int nu = 0; nu < links; ++nu) {
        const auto loo = exact::GibbsState::compute(n, terms_for(beta_prime, flip, nu), ens.exact);
        const double w = loo.correlation(link_mask[static_cast<std::size_t>(nu)]);
        const double j = flip * link_sign[static_cast<std::size_t>(nu)];
        exact_rhs += 0.5 * (t + j * w) / (1.0 + t * j * w);
      }
    }

    const auto state = exact::GibbsState::compute(r, base.beta, ens.exact);
    const auto masks = pair_masks(n);
    std::vector<double> w2, power(masks.size(), 1.0);
    for (auto m : masks) w2.push_back(state.correlation(m) * state.correlation(m));
    double series = 0.0, q_prev = 1.0, t_odd = t;
    for (int k = 0; t != 0.0; ++k) {
      if (k > 5000) throw ValidationError("pressure series: no convergence for beta' = " + std::to_string(beta_prime));
      double q_next = 0.0;
      for (std::size_t i = 0; i < w2.size(); ++i) {
        power[i] *= w2[i];
        q_next += power[i];
      }
      q_next /= static_cast<double>(w2.size());
      series += t_odd * (q_prev - q_next);
      q_prev = q_next;
      t_odd *= t * t;
      if (std::abs(t_odd) < 1e-12) break;
    }
    return std::vector<double>{derivative, exact_rhs, ap * series, flagged};
  });
  auto statistic = [](std::span<const double> m) {
    return std::vector<double>{m[0], m[1], m[0] - m[1], m[2], m[0] - m[2], m[3]};
  };
  const auto est = jackknife(rows, statistic);
  auto report = report_from_rows(IdentityId::pressure_derivative, rows, ens, statistic,
                                 std::max(std::abs(est[0].mean), std::abs(est[1].mean)));
  common_params(report, spec, ens);
  report.params["alpha_prime"] = ap;
  report.params["beta_prime"] = beta_prime;
  report.extras["rhs_series"] = est[3].mean;
  report.extras["rhs_series_stderr"] = est[3].stderr;
  report.extras["residual_series"] = est[4].mean;
  report.extras["residual_series_stderr"] = est[4].stderr;
  report.extras["series_sign"] =
      std::abs(est[0].mean - est[3].mean) <= std::abs(est[0].mean + est[3].mean) ? "+" : "-";
  report.extras["derivative_step"] = h;
  report.extras["flagged_realizations"] = static_cast<int>(std::lround(est[5].mean * ens.n_realizations));
  report.extras["pressure_normalization"] = "extensive";
  return report;
}

IdentityReport order_probe(int order_2n, int s, const PhiSpec& phi, const ModelSpec& spec,
                           const quench::EnsembleSpec& ens) {
  phi.validate();
  if (phi.s != s) throw ValidationError("order_probe: phi must live on the same s replicas");
  const auto terms = expansion::energy_expansion_terms(order_2n, s);
  const int top = order_2n;
  LinearIdentity full, lower;
  for (const auto& t : terms) {
    const double c = series::to_double(t.coefficient);
    int size = 0;
    for (const auto& f : t.monomial.factors) size = std::max<int>(size, static_cast<int>(f.labels.size()));
    for (auto* id : {&full, &lower}) {
      if (id == &lower && size >= top) continue;
      if (t.phi_attached)
        id->add(c, t.monomial * phi.monomial, true);
      else
        id->add_product(-c, t.monomial, phi.monomial, false);
    }
  }
  auto report = evaluate(full, IdentityId::four_overlap, spec, ens);
  const auto low = evaluate(lower, IdentityId::four_overlap, spec, ens);
  report.label = "order_probe";
  report.params["order"] = order_2n;
  report.params["s"] = s;
  report.params["phi"] = phi.descriptor();
  report.params["experimental"] = true;
  report.extras["probe"] = "energy-expansion order identity";
  report.extras["lower_overlap_residual"] = low.residual;
  report.extras["lower_overlap_stderr"] = low.stderr;
  report.extras["lower_overlap_normalized"] = low.normalized_residual;
  return report;
}

}  // namespace selfavg::identities
