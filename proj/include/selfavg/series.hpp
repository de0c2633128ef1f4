#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <string>
#include <vector>

namespace selfavg::series {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

BigInt factorial(int n);
BigInt binomial(int n, int k);

/// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& q);
double to_double(const Rational& q);

/// Sparse polynomial in a fixed number of commuting indeterminates with exact
/// rational coefficients. Terms with zero coefficient are never stored.
class Poly {
 public:
  using Exponents = std::vector<int>;

  explicit Poly(std::size_t n_vars = 0) : n_vars_(n_vars) {}
  static Poly constant(std::size_t n_vars, const Rational& c);
  static Poly variable(std::size_t n_vars, std::size_t index, const Rational& c = 1);

  std::size_t n_vars() const { return n_vars_; }
  const std::map<Exponents, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  Rational coefficient(const Exponents& e) const;

  void add_term(const Exponents& e, const Rational& c);

  Poly& operator+=(const Poly& other);
  Poly operator+(const Poly& other) const;
  Poly operator-(const Poly& other) const;
  Poly operator*(const Rational& c) const;
  Poly operator*(const Poly& other) const;

  bool operator==(const Poly&) const = default;

 private:
  std::size_t n_vars_;
  std::map<Exponents, Rational> terms_;
};

/// Keeps terms whose weighted degree sum_i weights[i] * e[i] is <= max_weight.
/// Also applies optional exponent reductions (x^2 = 1 for sign variables).
struct Truncation {
  std::vector<int> weights;
  int max_weight = 0;
  std::vector<std::size_t> involutions;

  int weight(const Poly::Exponents& e) const;
  Poly apply(const Poly& p) const;
};

Poly multiply(const Poly& a, const Poly& b, const Truncation& trunc);
Poly power(const Poly& x, int k, const Truncation& trunc);

/// log(1 + x) = sum_k (-1)^{k+1} x^k / k. x must have no constant term and
/// every term of x positive weight, so the sum terminates under truncation.
Poly log1p(const Poly& x, const Truncation& trunc);

/// (1 + x)^{-1} as the geometric series, under the same conditions.
Poly inverse_one_plus(const Poly& x, const Truncation& trunc);

}  // namespace selfavg::series
