#include <doctest.h>

#include <json.hpp>
#include <map>
#include <numeric>

#include "selfavg/errors.hpp"
#include "selfavg/exact.hpp"
#include "selfavg/expansion.hpp"
#include "selfavg/moments.hpp"

using namespace selfavg;
using expansion::Rational;

namespace {

using Key = std::pair<LabeledMonomial, bool>;
using TermMap = std::map<Key, Rational>;

TermMap as_map(const std::vector<expansion::ExpansionTerm>& terms) {
  TermMap m;
  for (const auto& t : terms) m[{t.monomial.normalized(), t.phi_attached}] += t.coefficient;
  for (auto it = m.begin(); it != m.end();) it = it->second == 0 ? m.erase(it) : std::next(it);
  return m;
}

void add(TermMap& m, const LabeledMonomial& mono, bool attached, const Rational& c) {
  m[{mono.normalized(), attached}] += c;
  if (m[{mono.normalized(), attached}] == 0) m.erase({mono.normalized(), attached});
}

LabeledMonomial q(std::vector<int> labels) { return overlap(std::move(labels)); }

// Lowest order: <phi> - <q12^2><phi> = <phi> - s <q_{1,s+1}^2 phi> + sum_{a=2}^s <q_{1a}^2 phi>,
// entered as (right side) - (left side).
TermMap order_two(int s) {
  TermMap m;
  add(m, {}, true, 1);
  add(m, q({1, s + 1}), true, -s);
  for (int a = 2; a <= s; ++a) add(m, q({1, a}), true, 1);
  add(m, {}, false, -1);
  add(m, q({1, 2}), false, 1);
  return m;
}

// Next order, same convention.
TermMap order_four(int s) {
  TermMap m;
  const Rational s1 = s, s2 = Rational(s * (s + 1), 2), s3 = Rational(s * (s + 1) * (s + 2), 6);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) add(m, q({a, b}), true, 1);
  add(m, q({s + 1, s + 2}), true, s2);
  for (int a = 2; a <= s; ++a) add(m, q({a, s + 1}), true, -s1);
  add(m, q({1, s + 1, s + 2, s + 3}), true, -s3);
  for (int a = 2; a <= s; ++a) add(m, q({1, a, s + 1, s + 2}), true, s2);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) add(m, q({1, a, b, s + 1}), true, -s1);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b)
      for (int c = b + 1; c <= s; ++c) add(m, q({1, a, b, c}), true, 1);
  add(m, q({1, 2}), false, -1);
  add(m, q({1, 2, 3, 4}), false, 1);
  return m;
}

// The 4-overlap relation left after the 2-overlap terms cancel, as (left) - (right).
TermMap four_overlap_relation(int s) {
  TermMap m;
  add(m, q({1, s + 1, s + 2, s + 3}), true, Rational(s * (s + 1) * (s + 2), 6));
  for (int a = 2; a <= s; ++a) add(m, q({1, a, s + 1, s + 2}), true, -Rational(s * (s + 1), 2));
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) add(m, q({1, a, b, s + 1}), true, s);
  add(m, q({1, 2, 3, 4}), false, -1);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b)
      for (int c = b + 1; c <= s; ++c) add(m, q({1, a, b, c}), true, -1);
  return m;
}

Rational factorial_ratio(int r, int s, int a) {
  auto fact = [](int n) {
    std::int64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  const std::int64_t num = fact(2 * r + 2 * s - a - 1);
  const std::int64_t den = fact(a) * fact(2 * r - a) * fact(2 * s - a);
  const std::int64_t g = std::gcd(num, den);
  return Rational(num / g, den / g) * ((a + 1) % 2 ? -1 : 1);
}

}  // namespace

TEST_CASE("first-family coefficients: documented values") {
  const auto c11 = expansion::first_family_terms(1, 1);
  REQUIRE(c11.size() == 3);
  CHECK(c11[0].coefficient == Rational(-3, 2));
  CHECK(c11[1].coefficient == 2);
  CHECK(c11[2].coefficient == Rational(-1, 2));
  const auto c12 = expansion::first_family_terms(1, 2);
  REQUIRE(c12.size() == 3);
  CHECK(c12[0].coefficient == Rational(-5, 2));
  CHECK(c12[1].coefficient == 4);
  CHECK(c12[2].coefficient == Rational(-3, 2));
}

TEST_CASE("first-family coefficients match integer factorials and the log expansion") {
  const auto terms = expansion::formal_log_expansion(8);
  for (int r = 1; r <= 3; ++r)
    for (int s = 1; r + s <= 4; ++s) {
      const auto direct = expansion::first_family_terms(r, s);
      REQUIRE(static_cast<int>(direct.size()) == std::min(2 * r, 2 * s) + 1);
      for (const auto& c : direct) CHECK(c.coefficient == factorial_ratio(r, s, c.a));
      CHECK(expansion::sharing_coefficients(terms, 2 * r, 2 * s) == direct);
    }
}

TEST_CASE("first-family coefficients sum to zero") {
  for (int r = 1; r <= 4; ++r)
    for (int s = 1; s <= 4; ++s) {
      Rational total = 0;
      for (const auto& c : expansion::first_family_terms(r, s)) total += c.coefficient;
      CHECK(total == 0);
    }
}

TEST_CASE("formal log expansion order cap") {
  CHECK_THROWS_AS(expansion::formal_log_expansion(expansion::formal_log_order_cap + 1), CapacityError);
}

TEST_CASE("lowest-order energy identity is the Ghirlanda-Guerra relation") {
  for (int s = 1; s <= 6; ++s) CHECK(as_map(expansion::energy_expansion_terms(2, s)) == order_two(s));
}

TEST_CASE("next-order energy identity term multiset") {
  for (int s = 1; s <= 6; ++s) CHECK(as_map(expansion::energy_expansion_terms(4, s)) == order_four(s));
}

TEST_CASE("two-overlap terms cancel at the next order, leaving the 4-overlap relation") {
  for (int s = 1; s <= 5; ++s) {
    const auto red = expansion::cancel_two_overlaps(expansion::energy_expansion_terms(4, s), s);
    CHECK(red.cancelled());
    auto expect = four_overlap_relation(s);
    for (auto& [k, c] : expect) c = -c;
    CHECK(as_map(red.remaining) == expect);
  }
}

TEST_CASE("identity term lists sum to zero") {
  for (int order : {2, 4, 6, 8})
    for (int s = 1; s <= 4; ++s) {
      Rational total = 0;
      for (const auto& t : expansion::energy_expansion_terms(order, s)) total += t.coefficient;
      CHECK(total == 0);
    }
  CHECK_THROWS_AS(expansion::energy_expansion_terms(10, 1), CapacityError);
  CHECK_THROWS_AS(expansion::energy_expansion_terms(3, 1), ValidationError);
}

TEST_CASE("one replica: attached terms reproduce E_ij (1 - w^2) w^(2n-2)") {
  // For s = 1 the J-average of (t + J g)/(1 + J t w) is t (1 - g w)/(1 - t^2 w^2),
  // so the order-2n attached terms equal E_ij[w^(2n-2) - w^(2n)] with w = omega(s_i s_j).
  ModelSpec spec;
  spec.n_sites = 5;
  spec.alpha = 2.0;
  spec.beta = 1.2;
  const auto state = exact::GibbsState::compute(sample_disorder(spec, 3), spec.beta);
  for (int order : {2, 4, 6, 8}) {
    double engine = 0.0;
    for (const auto& t : expansion::energy_expansion_terms(order, 1)) {
      if (!t.phi_attached) continue;
      const double v = t.monomial.is_constant() ? 1.0 : moments::replica_average(canonicalize(t.monomial), state, 8);
      engine += series::to_double(t.coefficient) * v;
    }
    double direct = 0.0;
    for (int i = 0; i < spec.n_sites; ++i)
      for (int j = 0; j < spec.n_sites; ++j) {
        const double w = i == j ? 1.0 : state.correlation((1u << i) | (1u << j));
        direct += (std::pow(w, order - 2) - std::pow(w, order)) / (spec.n_sites * spec.n_sites);
      }
    CHECK(engine == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("printed generic order versus derived coefficients") {
  const auto rows = expansion::compare_printed_generic_order(4, 3);
  bool found_match = false, found_mismatch = false;
  for (const auto& r : rows) {
    if (r.l == 2 && !r.with_replica_one) found_match = r.coefficient_matches() && r.monomial_matches();
    if (r.l == 0 && !r.with_replica_one) found_mismatch = r.printed == 15 && r.derived == 6;
  }
  CHECK(found_match);
  CHECK(found_mismatch);
}

TEST_CASE("json and text renderings") {
  const auto terms = expansion::energy_expansion_terms(4, 2);
  const auto j = nlohmann::json::parse(expansion::to_json(terms));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == terms.size());
  for (const auto& t : j) {
    CHECK(t.contains("coefficient"));
    CHECK(t["coefficient"].contains("num"));
    CHECK(t["coefficient"].contains("den"));
    CHECK(t.contains("monomial"));
    CHECK(t.contains("phi_attached"));
  }
  const auto text = expansion::to_text(expansion::combine_like_terms(terms));
  CHECK(text.find("q{1,2,3,4}^2") != std::string::npos);
}
