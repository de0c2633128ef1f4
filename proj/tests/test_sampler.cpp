#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "selfavg/errors.hpp"
#include "selfavg/exact.hpp"
#include "selfavg/moments.hpp"
#include "selfavg/sampler.hpp"

using namespace selfavg;

namespace {

DisorderRealization realization(int n, double alpha, std::uint64_t seed) {
  ModelSpec spec;
  spec.n_sites = n;
  spec.alpha = alpha;
  return sample_disorder(spec, seed);
}

}  // namespace

TEST_CASE("chain config validation") {
  sampler::ChainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.burn_in_sweeps = cfg.n_sweeps;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.thinning = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("Metropolis visits states with Boltzmann frequencies") {
  const auto r = realization(4, 2.0, 3);
  const double beta = 0.8;
  const auto g = oracle::gibbs(r, beta);
  sampler::MetropolisChain chain(r, beta, 99);
  for (int i = 0; i < 1000; ++i) chain.sweep();
  std::vector<double> freq(16, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    chain.sweep();
    freq[chain.state_mask()] += 1.0 / n;
  }
  double tv = 0.0;
  for (int x = 0; x < 16; ++x) tv += 0.5 * std::abs(freq[x] - g.p[x]);
  CHECK(tv < 0.01);
  CHECK(chain.accepted() <= chain.proposed());
}

TEST_CASE("monomial_value on explicit configurations") {
  const std::vector<std::int8_t> a{1, 1, -1, -1}, b{1, -1, 1, -1}, c{1, 1, 1, 1};
  const std::vector<std::span<const std::int8_t>> reps{a, b, c};
  // q12 = 0, q13 = 0, q23 = 0, q123 = (1 - 1 - 1 + 1)/4 = 0, q1 = 0, q3 = 1
  CHECK(sampler::monomial_value(canonicalize(parse_monomial("q{1,2}^2")), reps) == 0.0);
  const std::vector<std::span<const std::int8_t>> same{a, a};
  CHECK(sampler::monomial_value(canonicalize(parse_monomial("q{1,2}^2")), same) == 1.0);
}

TEST_CASE("MC estimate agrees with the exact replica average") {
  const auto r = realization(6, 2.0, 8);
  const double beta = 1.0;
  const auto state = exact::GibbsState::compute(r, beta);
  sampler::ChainConfig cfg;
  cfg.n_sweeps = 20000;
  cfg.burn_in_sweeps = 500;
  cfg.seed = 5;
  for (const char* text : {"q{1,2}^2", "q{1,2}^2*q{1,3}^2", "q{1,2,3,4}^2"}) {
    const auto m = canonicalize(parse_monomial(text));
    const auto est = sampler::mc_estimate_monomial(r, beta, m, m.n_replicas, cfg);
    const double exact_value = moments::replica_average(m, state);
    CHECK(est.stderr > 0.0);
    CHECK(std::abs(est.mean - exact_value) < 5.0 * est.stderr);
  }
}

TEST_CASE("MC estimates are reproducible from the seed") {
  const auto r = realization(5, 1.0, 2);
  sampler::ChainConfig cfg;
  cfg.n_sweeps = 2000;
  cfg.burn_in_sweeps = 100;
  cfg.seed = 12;
  const auto m = canonicalize(parse_monomial("q{1,2}^2"));
  const auto a = sampler::mc_estimate_monomial(r, 1.0, m, 4, cfg);
  const auto b = sampler::mc_estimate_monomial(r, 1.0, m, 4, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr == b.stderr);
}
