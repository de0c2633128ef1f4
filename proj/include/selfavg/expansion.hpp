#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "selfavg/monomial.hpp"
#include "selfavg/series.hpp"

namespace selfavg::expansion {

using series::Rational;

/// One term coefficient * t^{t_powers} * <monomial (times phi_s when attached)>.
/// Detached terms stand for <monomial> <phi_s>.
struct ExpansionTerm {
  Rational coefficient;
  std::vector<int> t_powers;
  LabeledMonomial monomial;
  bool phi_attached = false;
  /// Raw indeterminate product before mapping to overlaps, e.g. "O1^2*O12".
  std::string symbol;

  bool operator==(const ExpansionTerm&) const = default;
};

struct SharingCoefficient {
  int a = 0;
  Rational coefficient;

  bool operator==(const SharingCoefficient&) const = default;
};

/// (-1)^{a+1} (2r+2s-a-1)! / (a! (2r-a)! (2s-a)!) for a = 0..min(2r, 2s).
std::vector<SharingCoefficient> first_family_terms(int r, int s);

inline constexpr int formal_log_order_cap = 12;

/// log(1 + t1 O1 + t2 O2 + t1 t2 O12) up to total t-degree max_order. The
/// product O1^x O2^y O12^z averages to <q_R^2 q_S^2>_a with R = x + z,
/// S = y + z and a = z shared replicas, which is the monomial attached.
std::vector<ExpansionTerm> formal_log_expansion(int max_order);

/// Coefficients of t1^R t2^S grouped by sharing pattern a.
std::vector<SharingCoefficient> sharing_coefficients(const std::vector<ExpansionTerm>& terms, int R, int S);

inline constexpr int energy_order_cap = 8;

/// Order-2n identity from the link expansion
///   (1 + J g_1 / t) prod_{a=2}^{s} (1 + J t g_a) (1 + J t w)^{-s}
/// averaged over J = +-1. Order 2n is the coefficient of t^{2n-2}; g_a is the
/// link spin product in replica a and each power of w adds one fresh replica
/// s+1, s+2, ... . Attached terms come from replicas 1..s carrying phi_s;
/// detached terms are the phi-free s = 1 instance times <phi_s>, entered with
/// opposite sign so that the coefficients of the list sum to an identity = 0.
std::vector<ExpansionTerm> energy_expansion_terms(int order_2n, int s);

/// Result of eliminating every 2-overlap term with the integrated GG relations
///   <q_{a,f}^2 phi> = (1/s) X + (1/s) sum_{b != a} Y_ab      (a <= s < f)
///   <q_{f,g}^2 phi> = 2/(s+1) X + 2/(s(s+1)) sum_{a<b} Y_ab   (s < f < g)
/// where X = <q_12^2><phi> and Y_ab = <q_ab^2 phi>. Terms proportional to
/// <phi> alone are gathered in `phi_coefficient`.
struct TwoOverlapReduction {
  std::vector<ExpansionTerm> remaining;
  Rational phi_coefficient;
  Rational x_coefficient;
  std::map<std::pair<int, int>, Rational> y_coefficients;

  bool cancelled() const;
};

TwoOverlapReduction cancel_two_overlaps(const std::vector<ExpansionTerm>& terms, int s);

/// Sums coefficients of identical (monomial, attachment) pairs and drops zeros.
std::vector<ExpansionTerm> combine_like_terms(const std::vector<ExpansionTerm>& terms);

/// The printed closed form of the generic order, transcribed literally: for
/// l = 0..min(2n, s-1) and a_1 < ... < a_l in 2..s,
///   (-1)^{2n-l} C(2n+s-l+1, 2n-l) [ <phi q_A^2 q_{s+1..s+2n-l}^2>
///       - (2n-l+s+2)/(2n-l+1) <phi q_{1A}^2 q_{s+1..s+2n-l+1}^2> ]
/// with detached terms <q_{2n}^2><phi> - <q_{2n+2}^2><phi> moved to the
/// same side. Here 2n = order_2n - 2.
std::vector<ExpansionTerm> printed_generic_order_terms(int order_2n, int s);

/// Per (l, whether replica 1 is linked) block: printed vs derived coefficient
/// and whether the printed monomial (two separate squared overlaps) equals the
/// derived one (a single combined squared overlap).
struct GenericOrderComparison {
  int l = 0;
  bool with_replica_one = false;
  Rational printed;
  Rational derived;
  std::string printed_monomial;
  std::string derived_monomial;

  bool coefficient_matches() const { return printed == derived; }
  bool monomial_matches() const { return printed_monomial == derived_monomial; }
};

std::vector<GenericOrderComparison> compare_printed_generic_order(int order_2n, int s);

/// JSON array: {"coefficient": {"num","den"}, "t_powers", "monomial", "phi_attached", "symbol"}.
std::string to_json(const std::vector<ExpansionTerm>& terms);

/// Human-readable one term per line, e.g. "+3/2 <q{1,2}^2*phi>".
std::string to_text(const std::vector<ExpansionTerm>& terms, bool with_phi = true);

}  // namespace selfavg::expansion
