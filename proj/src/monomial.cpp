#include "selfavg/monomial.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>

#include "selfavg/errors.hpp"

namespace selfavg {

namespace {

std::string factors_to_string(const std::vector<OverlapFactor>& factors) {
  if (factors.empty()) return "1";
  std::string out;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (f) out += '*';
    out += "q{";
    for (std::size_t i = 0; i < factors[f].labels.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(factors[f].labels[i]);
    }
    out += '}';
    if (factors[f].exponent != 1) out += '^' + std::to_string(factors[f].exponent);
  }
  return out;
}

int degree(const std::vector<OverlapFactor>& factors) {
  int k = 0;
  for (const auto& f : factors) k += f.exponent;
  return k;
}

}  // namespace

LabeledMonomial LabeledMonomial::normalized() const {
  std::vector<OverlapFactor> work;
  work.reserve(factors.size());
  for (auto f : factors) {
    if (f.labels.empty()) throw ValidationError("monomial: empty overlap factor");
    if (f.exponent < 1) throw ValidationError("monomial: exponents must be >= 1");
    std::sort(f.labels.begin(), f.labels.end());
    if (f.labels.front() < 1) throw ValidationError("monomial: replica labels must be positive");
    if (std::adjacent_find(f.labels.begin(), f.labels.end()) != f.labels.end())
      throw ValidationError("monomial: repeated replica label inside one overlap factor");
    work.push_back(std::move(f));
  }
  std::sort(work.begin(), work.end(), [](const auto& a, const auto& b) { return a.labels < b.labels; });
  std::vector<OverlapFactor> merged;
  for (auto& f : work) {
    if (!merged.empty() && merged.back().labels == f.labels)
      merged.back().exponent += f.exponent;
    else
      merged.push_back(std::move(f));
  }
  std::sort(merged.begin(), merged.end());
  return {merged};
}

LabeledMonomial LabeledMonomial::operator*(const LabeledMonomial& other) const {
  LabeledMonomial out{factors};
  out.factors.insert(out.factors.end(), other.factors.begin(), other.factors.end());
  return out.normalized();
}

int LabeledMonomial::max_label() const {
  int m = 0;
  for (const auto& f : factors)
    for (int l : f.labels) m = std::max(m, l);
  return m;
}

int LabeledMonomial::total_degree() const { return degree(factors); }
std::string LabeledMonomial::to_string() const { return factors_to_string(factors); }
int ReplicaMonomial::total_degree() const { return degree(factors); }
std::string ReplicaMonomial::to_string() const { return factors_to_string(factors); }

ReplicaMonomial canonicalize(const LabeledMonomial& raw) {
  const auto norm = raw.normalized();
  const auto& factors = norm.factors;
  if (factors.empty()) return {};

  // Membership class of each label: the set of factor indices that contain it.
  std::map<int, std::vector<int>> membership;
  for (int f = 0; f < static_cast<int>(factors.size()); ++f)
    for (int l : factors[f].labels) membership[l].push_back(f);
  std::map<std::vector<int>, std::vector<int>> classes;
  for (const auto& [label, member_of] : membership) classes[member_of].push_back(label);

  struct Class {
    std::vector<int> member_of;
    std::vector<int> labels;
    // Relabeling-invariant key used to bound the search when there are many classes.
    std::vector<std::pair<std::size_t, int>> signature;
  };
  std::vector<Class> cls;
  for (auto& [member_of, labels] : classes) {
    Class c{member_of, labels, {}};
    for (int f : member_of) c.signature.emplace_back(factors[f].labels.size(), factors[f].exponent);
    std::sort(c.signature.begin(), c.signature.end());
    c.signature.emplace_back(labels.size(), 0);
    cls.push_back(std::move(c));
  }

  std::vector<std::size_t> order(cls.size());
  std::iota(order.begin(), order.end(), 0);
  // With many classes only orderings within equal-signature runs are tried.
  constexpr std::size_t full_search_limit = 7;
  const bool full = cls.size() <= full_search_limit;
  auto by_signature = [&](std::size_t a, std::size_t b) {
    if (cls[a].signature != cls[b].signature) return cls[a].signature < cls[b].signature;
    return a < b;
  };
  if (!full) std::sort(order.begin(), order.end(), by_signature);

  auto relabel = [&](const std::vector<std::size_t>& ord) {
    std::map<int, int> to;
    int next = 1;
    for (auto c : ord)
      for (int l : cls[c].labels) to[l] = next++;
    std::vector<OverlapFactor> out = factors;
    for (auto& f : out) {
      for (int& l : f.labels) l = to.at(l);
      std::sort(f.labels.begin(), f.labels.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<OverlapFactor> best;
  bool have = false;
  auto consider = [&](const std::vector<std::size_t>& ord) {
    auto candidate = relabel(ord);
    if (!have || candidate < best) {
      best = std::move(candidate);
      have = true;
    }
  };

  if (full) {
    do consider(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    // Cartesian product of permutations within each equal-signature run.
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i + 1;
      while (j < order.size() && cls[order[j]].signature == cls[order[i]].signature) ++j;
      runs.emplace_back(i, j);
      i = j;
    }
    auto recurse = [&](auto& self, std::size_t run) -> void {
      if (run == runs.size()) {
        consider(order);
        return;
      }
      auto first = order.begin() + static_cast<std::ptrdiff_t>(runs[run].first);
      auto last = order.begin() + static_cast<std::ptrdiff_t>(runs[run].second);
      std::sort(first, last);
      do self(self, run + 1);
      while (std::next_permutation(first, last));
    };
    recurse(recurse, 0);
  }

  ReplicaMonomial out;
  out.factors = std::move(best);
  out.n_replicas = static_cast<int>(membership.size());
  return out;
}

ReplicaMonomial canonicalize(const std::vector<std::pair<std::vector<int>, int>>& raw) {
  LabeledMonomial m;
  for (const auto& [labels, exponent] : raw) m.factors.push_back({labels, exponent});
  return canonicalize(m);
}

LabeledMonomial shared_overlaps(int size_r, int size_s, int a, int pow_r, int pow_s) {
  if (size_r < 0 || size_s < 0) throw ValidationError("shared_overlaps: sizes must be >= 0");
  if (a < 0 || a > std::min(size_r, size_s))
    throw ValidationError("shared pattern: a must lie in [0, min(size_r, size_s)]");
  if (pow_r < 1 || pow_s < 1) throw ValidationError("shared pattern: powers must be >= 1");
  LabeledMonomial m;
  std::vector<int> first(static_cast<std::size_t>(size_r));
  std::iota(first.begin(), first.end(), 1);
  std::vector<int> second;
  for (int l = 1; l <= a; ++l) second.push_back(l);
  for (int l = 0; l < size_s - a; ++l) second.push_back(size_r + 1 + l);
  if (!first.empty()) m.factors.push_back({first, pow_r});
  if (!second.empty()) m.factors.push_back({second, pow_s});
  return m.normalized();
}

ReplicaMonomial shared_pattern(int r, int s, int a, int pow_r, int pow_s) {
  if (r < 1 || s < 1) throw ValidationError("shared_pattern: r and s must be >= 1");
  if (a < 0 || a > std::min(2 * r, 2 * s)) throw ValidationError("shared_pattern: a must lie in [0, min(2r, 2s)]");
  return canonicalize(shared_overlaps(2 * r, 2 * s, a, pow_r, pow_s));
}

LabeledMonomial parse_monomial(std::string_view text) {
  auto fail = [&](const std::string& why) -> ValidationError {
    return ValidationError("monomial '" + std::string(text) + "': " + why);
  };
  if (text == "1") return {};
  LabeledMonomial m;
  std::size_t pos = 0;
  auto read_int = [&]() {
    int value = 0;
    const auto* begin = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
    if (ec != std::errc() || ptr == begin) throw fail("expected an integer at offset " + std::to_string(pos));
    pos += static_cast<std::size_t>(ptr - begin);
    return value;
  };
  auto expect = [&](char c) {
    if (pos >= text.size() || text[pos] != c)
      throw fail(std::string("expected '") + c + "' at offset " + std::to_string(pos));
    ++pos;
  };
  for (;;) {
    expect('q');
    expect('{');
    OverlapFactor f;
    f.labels.push_back(read_int());
    while (pos < text.size() && text[pos] == ',') {
      ++pos;
      f.labels.push_back(read_int());
    }
    expect('}');
    if (pos < text.size() && text[pos] == '^') {
      ++pos;
      f.exponent = read_int();
    }
    m.factors.push_back(std::move(f));
    if (pos == text.size()) break;
    expect('*');
  }
  return m.normalized();
}

LabeledMonomial overlap(std::vector<int> labels, int exponent) {
  LabeledMonomial m;
  m.factors.push_back({std::move(labels), exponent});
  return m.normalized();
}

}  // namespace selfavg
