#include <doctest.h>

#include "selfavg/errors.hpp"
#include "selfavg/series.hpp"

using namespace selfavg::series;

TEST_CASE("factorials and binomials") {
  CHECK(factorial(0) == 1);
  CHECK(factorial(20) == BigInt("2432902008176640000"));
  CHECK(factorial(25) == BigInt("15511210043330985984000000"));
  CHECK(binomial(10, 3) == 120);
  CHECK(binomial(3, 5) == 0);
  CHECK_THROWS_AS(factorial(-1), selfavg::ValidationError);
}

TEST_CASE("rational formatting") {
  CHECK(to_string(Rational(-3, 2)) == "-3/2");
  CHECK(to_string(Rational(4, 2)) == "2");
  CHECK(to_double(Rational(1, 4)) == 0.25);
}

TEST_CASE("polynomial arithmetic") {
  const Poly x = Poly::variable(2, 0), y = Poly::variable(2, 1);
  const Poly p = (x + y) * (x - y);
  CHECK(p.coefficient({2, 0}) == 1);
  CHECK(p.coefficient({0, 2}) == -1);
  CHECK(p.coefficient({1, 1}) == 0);
  CHECK(p.terms().size() == 2);
  CHECK((p - p).is_zero());
}

TEST_CASE("log1p of a single variable") {
  const Poly x = Poly::variable(1, 0);
  const Truncation trunc{{1}, 7, {}};
  const Poly l = log1p(x, trunc);
  for (int k = 1; k <= 7; ++k) CHECK(l.coefficient({k}) == Rational(k % 2 ? 1 : -1, k));
  CHECK(l.coefficient({8}) == 0);
}

TEST_CASE("log1p of a sum splits the cross terms") {
  // log(1 + x + y + xy) = log(1 + x) + log(1 + y): no mixed monomials
  const Poly x = Poly::variable(2, 0), y = Poly::variable(2, 1);
  const Truncation trunc{{1, 1}, 8, {}};
  const Poly l = log1p(x + y + x * y, trunc);
  for (const auto& [e, c] : l.terms()) CHECK((e[0] == 0 || e[1] == 0));
  CHECK(l.coefficient({3, 0}) == Rational(1, 3));
}

TEST_CASE("geometric inverse and involutions") {
  const Poly x = Poly::variable(1, 0);
  const Truncation trunc{{1}, 6, {}};
  const Poly inv = inverse_one_plus(x, trunc);
  const Poly one = multiply(inv, Poly::constant(1, 1) + x, trunc);
  CHECK(one == Poly::constant(1, 1));

  // J^2 = 1 folds powers of a sign variable
  const Poly j = Poly::variable(2, 1);
  const Truncation sign{{1, 0}, 4, {1}};
  const Poly p = power(Poly::constant(2, 1) + j * Rational(1), 3, sign);
  CHECK(p.coefficient({0, 0}) == 4);
  CHECK(p.coefficient({0, 1}) == 4);
}
