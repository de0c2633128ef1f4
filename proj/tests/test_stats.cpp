#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "selfavg/rng.hpp"
#include "selfavg/stats.hpp"

using namespace selfavg;

TEST_CASE("jackknife of the mean of {1,2,3,4}") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto m = jackknife_mean(v);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.stderr == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-14));
}

TEST_CASE("jackknife of a nonlinear statistic") {
  // ratio of means: leave-one-out values computed by hand
  const std::vector<std::vector<double>> rows{{1, 2}, {2, 2}, {3, 4}, {4, 4}};
  const auto r = jackknife(rows, [](std::span<const double> m) { return std::vector<double>{m[0] / m[1]}; });
  std::vector<double> loo;
  for (int i = 0; i < 4; ++i) {
    double a = 0, b = 0;
    for (int j = 0; j < 4; ++j)
      if (j != i) {
        a += rows[j][0];
        b += rows[j][1];
      }
    loo.push_back(a / b);
  }
  double mean = 0;
  for (double x : loo) mean += x / 4;
  double var = 0;
  for (double x : loo) var += (x - mean) * (x - mean);
  CHECK(r[0].mean == doctest::Approx(10.0 / 12.0));
  CHECK(r[0].stderr == doctest::Approx(std::sqrt(3.0 / 4.0 * var)).epsilon(1e-13));
}

TEST_CASE("blocking enlarges the error of a correlated series") {
  Rng rng(2);
  std::vector<double> iid(1 << 14), ar(1 << 14);
  double x = 0.0;
  for (std::size_t i = 0; i < iid.size(); ++i) {
    iid[i] = rng.uniform();
    x = 0.95 * x + (rng.uniform() - 0.5);
    ar[i] = x;
  }
  const auto naive_iid = jackknife_mean(iid).stderr;
  CHECK(blocking(iid).stderr == doctest::Approx(naive_iid).epsilon(0.25));
  CHECK(blocking(ar).stderr > 3.0 * jackknife_mean(ar).stderr);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("default parallelism comes from SELFAVG_THREADS") {
  setenv("SELFAVG_THREADS", "3", 1);
  CHECK(default_parallelism() == 3);
  unsetenv("SELFAVG_THREADS");
  CHECK(default_parallelism() == 1);
}
