#include "selfavg/expansion.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "selfavg/errors.hpp"

namespace selfavg::expansion {

using series::binomial;
using series::factorial;
using series::Poly;
using series::Truncation;

namespace {

std::string power_symbol(const std::string& name, int e) {
  if (e == 0) return {};
  return e == 1 ? name : name + "^" + std::to_string(e);
}

std::string join_symbols(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += '*';
    out += p;
  }
  return out.empty() ? "1" : out;
}

LabeledMonomial squared_overlap(const std::vector<int>& labels) {
  if (labels.empty()) return {};
  return overlap(labels, 2);
}

// Terms of (t + J g_1) prod_{a=2}^{s} (1 + J t g_a) (1 + J t w)^{-s} with t-power
// `t_power` and even J-power. Variables: t, J, w, g_1..g_s.
struct LinkTerm {
  Rational coefficient;
  std::vector<int> replicas;  // linked replicas among 1..s, then fresh ones
  std::string symbol;
};

std::vector<LinkTerm> link_expansion(int t_power, int s) {
  const std::size_t n_vars = 3 + static_cast<std::size_t>(s);
  constexpr std::size_t T = 0, J = 1, W = 2;
  auto g = [](int a) { return 2 + static_cast<std::size_t>(a); };
  Truncation trunc;
  trunc.weights.assign(n_vars, 0);
  trunc.weights[T] = 1;
  trunc.max_weight = t_power;
  trunc.involutions = {J};

  auto var = [&](std::size_t i) { return Poly::variable(n_vars, i); };
  const Poly one = Poly::constant(n_vars, 1);
  Poly product = var(T) + var(J) * var(g(1));
  for (int a = 2; a <= s; ++a) product = multiply(product, one + var(J) * var(T) * var(g(a)), trunc);
  const Poly inverse = inverse_one_plus(var(J) * var(T) * var(W), trunc);
  product = multiply(product, series::power(inverse, s, trunc), trunc);

  std::vector<LinkTerm> out;
  for (const auto& [e, c] : product.terms()) {
    if (e[T] != t_power || e[J] % 2 != 0) continue;
    LinkTerm term{c, {}, {}};
    std::vector<std::string> parts;
    for (int a = 1; a <= s; ++a) {
      if (e[g(a)] > 1) throw std::logic_error("link expansion: g_a appeared twice");
      if (e[g(a)] == 1) {
        term.replicas.push_back(a);
        parts.push_back("g" + std::to_string(a));
      }
    }
    for (int k = 0; k < e[W]; ++k) term.replicas.push_back(s + 1 + k);
    parts.push_back(power_symbol("w", e[W]));
    term.symbol = join_symbols(parts);
    out.push_back(std::move(term));
  }
  return out;
}

void check_energy_order(int order_2n, int s) {
  if (s < 1) throw ValidationError("expand: s must be >= 1");
  if (order_2n < 2 || order_2n % 2 != 0) throw ValidationError("expand: order must be an even integer >= 2");
  if (order_2n > energy_order_cap)
    throw CapacityError("expand: order " + std::to_string(order_2n) + " exceeds the cap of " +
                        std::to_string(energy_order_cap));
}

}  // namespace

std::vector<SharingCoefficient> first_family_terms(int r, int s) {
  if (r < 1 || s < 1) throw ValidationError("first_family_terms: r and s must be >= 1");
  const int R = 2 * r, S = 2 * s;
  std::vector<SharingCoefficient> out;
  for (int a = 0; a <= std::min(R, S); ++a) {
    Rational c(factorial(R + S - a - 1), factorial(a) * factorial(R - a) * factorial(S - a));
    if (a % 2 == 0) c = -c;
    out.push_back({a, c});
  }
  return out;
}

std::vector<ExpansionTerm> formal_log_expansion(int max_order) {
  if (max_order < 1) throw ValidationError("formal_log_expansion: max_order must be >= 1");
  if (max_order > formal_log_order_cap)
    throw CapacityError("formal_log_expansion: max_order " + std::to_string(max_order) + " exceeds the cap of " +
                        std::to_string(formal_log_order_cap));
  constexpr std::size_t n_vars = 5;
  constexpr std::size_t T1 = 0, T2 = 1, O1 = 2, O2 = 3, O12 = 4;
  Truncation trunc{{1, 1, 0, 0, 0}, max_order, {}};
  auto var = [](std::size_t i) { return Poly::variable(n_vars, i); };
  const Poly x = var(T1) * var(O1) + var(T2) * var(O2) + var(T1) * var(T2) * var(O12);
  const Poly log = series::log1p(x, trunc);

  std::vector<ExpansionTerm> out;
  for (const auto& [e, c] : log.terms()) {
    const int R = e[T1], S = e[T2], z = e[O12];
    ExpansionTerm term;
    term.coefficient = c;
    term.t_powers = {R, S};
    term.monomial = canonicalize(shared_overlaps(R, S, z, 2, 2)).labeled();
    term.symbol = join_symbols({power_symbol("O1", e[O1]), power_symbol("O2", e[O2]), power_symbol("O12", z)});
    out.push_back(std::move(term));
  }
  std::stable_sort(out.begin(), out.end(), [](const ExpansionTerm& a, const ExpansionTerm& b) {
    const int oa = a.t_powers[0] + a.t_powers[1], ob = b.t_powers[0] + b.t_powers[1];
    if (oa != ob) return oa < ob;
    if (a.t_powers != b.t_powers) return a.t_powers > b.t_powers;
    return a.monomial.max_label() > b.monomial.max_label();
  });
  return out;
}

std::vector<SharingCoefficient> sharing_coefficients(const std::vector<ExpansionTerm>& terms, int R, int S) {
  std::map<int, Rational> by_a;
  for (const auto& t : terms) {
    if (t.t_powers != std::vector<int>{R, S}) continue;
    by_a[R + S - t.monomial.max_label()] += t.coefficient;
  }
  std::vector<SharingCoefficient> out;
  for (const auto& [a, c] : by_a)
    if (c != 0) out.push_back({a, c});
  return out;
}

std::vector<ExpansionTerm> combine_like_terms(const std::vector<ExpansionTerm>& terms) {
  std::vector<ExpansionTerm> out;
  for (const auto& t : terms) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ExpansionTerm& o) {
      return o.phi_attached == t.phi_attached && o.monomial == t.monomial && o.t_powers == t.t_powers;
    });
    if (it == out.end())
      out.push_back(t);
    else
      it->coefficient += t.coefficient;
  }
  std::erase_if(out, [](const ExpansionTerm& t) { return t.coefficient == 0; });
  std::stable_sort(out.begin(), out.end(), [](const ExpansionTerm& a, const ExpansionTerm& b) {
    if (a.phi_attached != b.phi_attached) return a.phi_attached;
    return a.monomial < b.monomial;
  });
  return out;
}

std::vector<ExpansionTerm> energy_expansion_terms(int order_2n, int s) {
  check_energy_order(order_2n, s);
  const int t_power = order_2n - 1;  // coefficient of t^{order-2} after dividing by t
  std::vector<ExpansionTerm> out;
  for (auto& lt : link_expansion(t_power, s))
    out.push_back({lt.coefficient, {order_2n - 2}, squared_overlap(lt.replicas), true, lt.symbol});
  for (auto& lt : link_expansion(t_power, 1)) {
    auto mono = squared_overlap(lt.replicas);
    if (!mono.is_constant()) mono = canonicalize(mono).labeled();
    out.push_back({-lt.coefficient, {order_2n - 2}, mono, false, lt.symbol});
  }
  return combine_like_terms(out);
}

bool TwoOverlapReduction::cancelled() const {
  return phi_coefficient == 0 && x_coefficient == 0 && y_coefficients.empty();
}

TwoOverlapReduction cancel_two_overlaps(const std::vector<ExpansionTerm>& terms, int s) {
  if (s < 1) throw ValidationError("cancel_two_overlaps: s must be >= 1");
  TwoOverlapReduction out;
  auto add_y = [&](int a, int b, const Rational& c) { out.y_coefficients[{std::min(a, b), std::max(a, b)}] += c; };
  for (const auto& t : terms) {
    const auto& f = t.monomial.factors;
    if (f.empty()) {
      out.phi_coefficient += t.coefficient;
      continue;
    }
    const bool two_overlap = f.size() == 1 && f[0].labels.size() == 2 && f[0].exponent == 2;
    if (!two_overlap) {
      out.remaining.push_back(t);
      continue;
    }
    if (!t.phi_attached) {
      out.x_coefficient += t.coefficient;
      continue;
    }
    const int a = f[0].labels[0], b = f[0].labels[1];
    const Rational c = t.coefficient;
    if (b <= s) {
      add_y(a, b, c);
    } else if (a <= s) {
      out.x_coefficient += c / s;
      for (int other = 1; other <= s; ++other)
        if (other != a) add_y(a, other, c / s);
    } else {
      out.x_coefficient += c * Rational(2, s + 1);
      for (int p = 1; p <= s; ++p)
        for (int q = p + 1; q <= s; ++q) add_y(p, q, c * Rational(2, s * (s + 1)));
    }
  }
  std::erase_if(out.y_coefficients, [](const auto& kv) { return kv.second == 0; });
  return out;
}

std::vector<ExpansionTerm> printed_generic_order_terms(int order_2n, int s) {
  check_energy_order(order_2n, s);
  const int m = order_2n - 2;
  std::vector<ExpansionTerm> out;
  std::vector<int> pool;
  for (int a = 2; a <= s; ++a) pool.push_back(a);
  auto fresh = [&](int count) {
    std::vector<int> v(static_cast<std::size_t>(count));
    std::iota(v.begin(), v.end(), s + 1);
    return v;
  };
  for (int l = 0; l <= std::min(m, s - 1); ++l) {
    const Rational c = Rational(binomial(m + s - l + 1, m - l)) * ((m - l) % 2 ? -1 : 1);
    const Rational linked = -c * Rational(m - l + s + 2, m - l + 1);
    std::vector<bool> pick(pool.size(), false);
    std::fill(pick.begin(), pick.begin() + l, true);
    do {
      std::vector<int> A;
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (pick[i]) A.push_back(pool[i]);
      std::vector<int> oneA{1};
      oneA.insert(oneA.end(), A.begin(), A.end());
      out.push_back({c, {m}, squared_overlap(A) * squared_overlap(fresh(m - l)), true, {}});
      out.push_back({linked, {m}, squared_overlap(oneA) * squared_overlap(fresh(m - l + 1)), true, {}});
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  // Left-hand side moved across: -<q_m^2><phi> + <q_{m+2}^2><phi>.
  std::vector<int> lower(static_cast<std::size_t>(m)), upper(static_cast<std::size_t>(m + 2));
  std::iota(lower.begin(), lower.end(), 1);
  std::iota(upper.begin(), upper.end(), 1);
  out.push_back({Rational(-1), {m}, squared_overlap(lower), false, {}});
  out.push_back({Rational(1), {m}, squared_overlap(upper), false, {}});
  return combine_like_terms(out);
}

std::vector<GenericOrderComparison> compare_printed_generic_order(int order_2n, int s) {
  check_energy_order(order_2n, s);
  const int m = order_2n - 2;
  const auto derived_terms = energy_expansion_terms(order_2n, s);
  std::vector<GenericOrderComparison> out;
  for (int l = 0; l <= std::min(m + 1, s - 1); ++l) {
    for (int eps = 0; eps <= 1; ++eps) {
      const int k = m - l + eps;  // fresh replicas in the derived term
      if (k < 0) continue;
      std::vector<int> A(static_cast<std::size_t>(l));
      std::iota(A.begin(), A.end(), 2);
      std::vector<int> linked;
      if (eps) linked.push_back(1);
      linked.insert(linked.end(), A.begin(), A.end());
      std::vector<int> fresh(static_cast<std::size_t>(k));
      std::iota(fresh.begin(), fresh.end(), s + 1);

      GenericOrderComparison cmp;
      cmp.l = l;
      cmp.with_replica_one = eps == 1;
      std::vector<int> all = linked;
      all.insert(all.end(), fresh.begin(), fresh.end());
      const auto derived_mono = squared_overlap(all);
      cmp.derived_monomial = derived_mono.to_string();
      for (const auto& t : derived_terms)
        if (t.phi_attached && t.monomial == derived_mono) cmp.derived = t.coefficient;

      const auto printed_mono = squared_overlap(linked) * squared_overlap(fresh);
      cmp.printed_monomial = printed_mono.to_string();
      if (l <= std::min(m, s - 1)) {
        const Rational c = Rational(binomial(m + s - l + 1, m - l)) * ((m - l) % 2 ? -1 : 1);
        cmp.printed = eps ? -c * Rational(m - l + s + 2, m - l + 1) : c;
      }
      out.push_back(std::move(cmp));
    }
  }
  return out;
}

std::string to_json(const std::vector<ExpansionTerm>& terms) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : terms) {
    nlohmann::ordered_json j;
    j["coefficient"] = {{"num", boost::multiprecision::numerator(t.coefficient).str()},
                        {"den", boost::multiprecision::denominator(t.coefficient).str()}};
    j["t_powers"] = t.t_powers;
    j["monomial"] = t.monomial.to_string();
    j["phi_attached"] = t.phi_attached;
    j["symbol"] = t.symbol;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::string to_text(const std::vector<ExpansionTerm>& terms, bool with_phi) {
  std::string out;
  for (const auto& t : terms) {
    std::string c = series::to_string(t.coefficient);
    if (c.front() != '-') c = "+" + c;
    std::string body;
    if (!with_phi)
      body = "<" + t.monomial.to_string() + ">";
    else if (t.phi_attached)
      body = t.monomial.is_constant() ? "<phi>" : "<" + t.monomial.to_string() + "*phi>";
    else
      body = t.monomial.is_constant() ? "<phi>" : "<" + t.monomial.to_string() + "><phi>";
    out += c + " " + body;
    if (!t.symbol.empty()) out += "    [" + t.symbol + "]";
    out += '\n';
  }
  return out;
}

}  // namespace selfavg::expansion
