#include <doctest.h>

#include <cmath>
#include <set>

#include "oracle.hpp"
#include "selfavg/errors.hpp"
#include "selfavg/model.hpp"
#include "selfavg/rng.hpp"

using namespace selfavg;

TEST_CASE("derive_seed depends only on parent and index") {
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("Rng streams are reproducible") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("Poisson variates have the right mean and variance") {
  for (double mean : {0.3, 3.0, 45.0}) {
    Rng rng(11);
    const int n = 40000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double var = s2 / n - m * m;
    CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(std::abs(var - mean) < 0.05 * mean + 0.02);
  }
  Rng rng(1);
  CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("below() is uniform on small ranges") {
  Rng rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("ModelSpec validation") {
  ModelSpec spec;
  spec.n_sites = 4;
  CHECK_NOTHROW(spec.validate());
  auto bad = spec;
  bad.n_sites = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.beta = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = spec;
  bad.interactions = {{2, 0.6}, {4, 0.6}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.interactions = {{2, 0.6}, {4, 0.8}};
  CHECK_NOTHROW(bad.validate());
  bad = spec;
  bad.perturbations = {{2, -1.0, 0.5, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("sample_disorder is deterministic and has Poisson(alpha N) couplings") {
  ModelSpec spec;
  spec.n_sites = 10;
  spec.alpha = 1.5;
  spec.beta = 1.0;
  CHECK(sample_disorder(spec, 9) == sample_disorder(spec, 9));
  double total = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto r = sample_disorder(spec, derive_seed(1, i));
    total += static_cast<double>(r.couplings.size());
    for (const auto& c : r.couplings) {
      REQUIRE(c.sites.size() == 2);
      for (auto s : c.sites) CHECK(s < 10u);
      CHECK((c.sign == 1 || c.sign == -1));
    }
  }
  const double expected = spec.alpha * spec.n_sites;
  CHECK(std::abs(total / n - expected) < 5.0 * std::sqrt(expected / n));
}

TEST_CASE("perturbation links carry strength * weight / beta and do not move base sites") {
  ModelSpec spec;
  spec.n_sites = 6;
  spec.alpha = 1.0;
  spec.beta = 2.0;
  auto a = spec, b = spec;
  a.perturbations = {{2, 3.0, 0.5, 1.0}};
  b.perturbations = {{2, 3.0, 0.9, 1.0}};
  const auto ra = sample_disorder(a, 17), rb = sample_disorder(b, 17);
  REQUIRE(ra.couplings.size() == rb.couplings.size());
  for (std::size_t i = 0; i < ra.couplings.size(); ++i) {
    CHECK(ra.couplings[i].sites == rb.couplings[i].sites);
    if (ra.couplings[i].origin == 0) CHECK(ra.couplings[i].strength_scale == doctest::Approx(0.25));
  }
}

TEST_CASE("energy agrees with a direct evaluation") {
  ModelSpec spec;
  spec.n_sites = 5;
  spec.alpha = 2.0;
  spec.interactions = {{2, 0.6}, {3, 0.8}};
  const auto r = sample_disorder(spec, 4);
  for (std::uint32_t x = 0; x < 32; ++x) {
    std::vector<std::int8_t> config(5);
    for (int i = 0; i < 5; ++i) config[i] = static_cast<std::int8_t>(oracle::spin(x, i));
    CHECK(energy(r, config) == doctest::Approx(oracle::hamiltonian(r, x)).epsilon(1e-14));
  }
  std::vector<std::int8_t> wrong(4, 1);
  CHECK_THROWS_AS(energy(r, wrong), ValidationError);
}

TEST_CASE("reduced_mask cancels repeated sites") {
  CouplingTerm c;
  c.sites = {1, 3, 1};
  CHECK(reduced_mask(c) == (1u << 3));
}

TEST_CASE("merged and two-source perturbation recipes agree in distribution") {
  const double alpha = 1.0, alpha_prime = 2.0, beta = 1.0, beta_prime = 0.5, t = 0.6;
  const int n = 5;
  const auto merged = merge_perturbation_params(alpha, alpha_prime, beta, beta_prime, n, t);
  CHECK(merged.merged_rate == doctest::Approx(alpha + alpha_prime * t / n));
  CHECK(merged.scale == doctest::Approx(0.5));
  double count_a = 0, count_b = 0, scaled_a = 0, scaled_b = 0;
  Rng ra(1), rb(2);
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) {
    for (const auto& c : sample_merged_couplings(merged, n, ra)) {
      ++count_a;
      scaled_a += c.strength_scale != 1.0;
    }
    for (const auto& c : sample_two_source_couplings(alpha, alpha_prime, merged.scale, n, t, rb)) {
      ++count_b;
      scaled_b += c.strength_scale != 1.0;
    }
  }
  const double mean = alpha * n + alpha_prime * t;
  CHECK(std::abs(count_a / trials - mean) < 5 * std::sqrt(mean / trials));
  CHECK(std::abs(count_b / trials - mean) < 5 * std::sqrt(mean / trials));
  CHECK(std::abs(scaled_a / trials - alpha_prime * t) < 5 * std::sqrt(alpha_prime * t / trials));
  CHECK(std::abs(scaled_b / trials - alpha_prime * t) < 5 * std::sqrt(alpha_prime * t / trials));
}
