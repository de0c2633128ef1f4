#include "selfavg/series.hpp"

#include <algorithm>

#include "selfavg/errors.hpp"

namespace selfavg::series {

BigInt factorial(int n) {
  if (n < 0) throw ValidationError("factorial of a negative integer");
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

BigInt binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

std::string to_string(const Rational& q) {
  const auto num = boost::multiprecision::numerator(q);
  const auto den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

Poly Poly::constant(std::size_t n_vars, const Rational& c) {
  Poly p(n_vars);
  p.add_term(Exponents(n_vars, 0), c);
  return p;
}

Poly Poly::variable(std::size_t n_vars, std::size_t index, const Rational& c) {
  if (index >= n_vars) throw ValidationError("Poly::variable: index out of range");
  Exponents e(n_vars, 0);
  e[index] = 1;
  Poly p(n_vars);
  p.add_term(e, c);
  return p;
}

Rational Poly::coefficient(const Exponents& e) const {
  const auto it = terms_.find(e);
  return it == terms_.end() ? Rational(0) : it->second;
}

void Poly::add_term(const Exponents& e, const Rational& c) {
  if (e.size() != n_vars_) throw ValidationError("Poly: exponent vector has the wrong length");
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly& Poly::operator+=(const Poly& other) {
  if (other.n_vars_ != n_vars_) throw ValidationError("Poly: mismatched variable counts");
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

Poly Poly::operator+(const Poly& other) const {
  Poly out = *this;
  out += other;
  return out;
}

Poly Poly::operator-(const Poly& other) const { return *this + other * Rational(-1); }

Poly Poly::operator*(const Rational& c) const {
  Poly out(n_vars_);
  if (c == 0) return out;
  for (const auto& [e, v] : terms_) out.terms_.emplace(e, v * c);
  return out;
}

Poly Poly::operator*(const Poly& other) const {
  return multiply(*this, other, Truncation{std::vector<int>(n_vars_, 0), 0, {}});
}

int Truncation::weight(const Poly::Exponents& e) const {
  int w = 0;
  for (std::size_t i = 0; i < weights.size() && i < e.size(); ++i) w += weights[i] * e[i];
  return w;
}

Poly Truncation::apply(const Poly& p) const {
  Poly out(p.n_vars());
  for (const auto& [key, c] : p.terms()) {
    auto e = key;
    for (auto i : involutions) e[i] %= 2;
    if (weight(e) <= max_weight) out.add_term(e, c);
  }
  return out;
}

Poly multiply(const Poly& a, const Poly& b, const Truncation& trunc) {
  if (a.n_vars() != b.n_vars()) throw ValidationError("Poly: mismatched variable counts");
  Poly out(a.n_vars());
  Poly::Exponents e(a.n_vars());
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) {
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      for (auto i : trunc.involutions) e[i] %= 2;
      if (trunc.weight(e) > trunc.max_weight) continue;
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

Poly power(const Poly& x, int k, const Truncation& trunc) {
  if (k < 0) throw ValidationError("Poly power: negative exponent");
  Poly out = Poly::constant(x.n_vars(), 1);
  for (int i = 0; i < k; ++i) out = multiply(out, x, trunc);
  return out;
}

namespace {

int max_terms(const Poly& x, const Truncation& trunc) {
  int min_weight = -1;
  for (const auto& [e, c] : x.terms()) {
    const int w = trunc.weight(e);
    if (w <= 0) throw ValidationError("series: argument must have positive weight in every term");
    min_weight = min_weight < 0 ? w : std::min(min_weight, w);
  }
  return min_weight < 0 ? 0 : trunc.max_weight / min_weight;
}

}  // namespace

Poly log1p(const Poly& x, const Truncation& trunc) {
  const int k_max = max_terms(x, trunc);
  Poly out(x.n_vars());
  Poly xk = Poly::constant(x.n_vars(), 1);
  for (int k = 1; k <= k_max; ++k) {
    xk = multiply(xk, x, trunc);
    out += xk * Rational(k % 2 ? 1 : -1, k);
  }
  return out;
}

Poly inverse_one_plus(const Poly& x, const Truncation& trunc) {
  const int k_max = max_terms(x, trunc);
  Poly out = Poly::constant(x.n_vars(), 1);
  Poly xk = out;
  const Poly minus_x = x * Rational(-1);
  for (int k = 1; k <= k_max; ++k) {
    xk = multiply(xk, minus_x, trunc);
    out += xk;
  }
  return trunc.apply(out);
}

}  // namespace selfavg::series
