#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace selfavg {

/// q_{labels}^{exponent}: a multi-overlap among the listed replicas.
struct OverlapFactor {
  std::vector<int> labels;  ///< sorted, distinct, >= 1
  int exponent = 1;

  auto operator<=>(const OverlapFactor& other) const {
    if (auto c = labels.size() <=> other.labels.size(); c != 0) return c;
    if (auto c = labels <=> other.labels; c != 0) return c;
    return exponent <=> other.exponent;
  }
  bool operator==(const OverlapFactor&) const = default;
};

/// A product of multi-overlaps with fixed replica labels. Used where labels
/// carry meaning relative to something else (an attached test function phi_s
/// living on replicas 1..s), so no relabeling is applied.
struct LabeledMonomial {
  std::vector<OverlapFactor> factors;

  /// Sorts labels within factors, merges identical factors, sorts factors.
  /// Throws ValidationError on empty factors, labels < 1, repeated labels
  /// within one factor or exponents < 1.
  LabeledMonomial normalized() const;
  LabeledMonomial operator*(const LabeledMonomial& other) const;
  bool operator==(const LabeledMonomial&) const = default;
  auto operator<=>(const LabeledMonomial&) const = default;

  int max_label() const;
  int total_degree() const;
  bool is_constant() const { return factors.empty(); }
  std::string to_string() const;
};

/// Canonical representative of a replica-relabeling class of monomials.
/// Labels are exactly 1..n_replicas and factors are sorted by (size, labels, exponent).
struct ReplicaMonomial {
  std::vector<OverlapFactor> factors;
  int n_replicas = 0;

  /// Number of site indices produced when the powers are expanded (sum of exponents).
  int total_degree() const;
  std::string to_string() const;
  LabeledMonomial labeled() const { return {factors}; }

  bool operator==(const ReplicaMonomial&) const = default;
  auto operator<=>(const ReplicaMonomial&) const = default;
};

/// Lexicographic minimum of the sorted factor list over relabelings. Labels
/// that belong to exactly the same factors are interchangeable, so only
/// orderings of those membership classes (each mapped to a contiguous label
/// block) are searched.
ReplicaMonomial canonicalize(const LabeledMonomial& raw);
ReplicaMonomial canonicalize(const std::vector<std::pair<std::vector<int>, int>>& raw);

/// q_{2r}^{pow_r} q_{2s}^{pow_s} with exactly `a` replicas shared between the
/// two factors (2r + 2s - a replicas in total).
ReplicaMonomial shared_pattern(int r, int s, int a, int pow_r, int pow_s);

/// Same construction for overlaps of arbitrary sizes (odd sizes, 0 meaning q_0 = 1).
LabeledMonomial shared_overlaps(int size_r, int size_s, int a, int pow_r, int pow_s);

/// Parses "q{1,2}^2*q{1,3}^2" (whitespace-free) or "1".
LabeledMonomial parse_monomial(std::string_view text);

/// q_{labels}^{exponent} as a one-factor labeled monomial.
LabeledMonomial overlap(std::vector<int> labels, int exponent = 2);

}  // namespace selfavg
