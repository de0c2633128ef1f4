// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "selfavg/exact.hpp"
#include "selfavg/expansion.hpp"
#include "selfavg/identities.hpp"
#include "selfavg/moments.hpp"
#include "selfavg/quench.hpp"
#include "selfavg/sampler.hpp"

using namespace selfavg;
namespace id = selfavg::identities;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool pass, double seconds, double limit, const std::string& detail) {
  const bool in_time = limit <= 0.0 || seconds < limit;
  const bool ok = pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %s  %s  time=%.2fs", name, ok ? "PASS" : "FAIL", detail.c_str(), seconds);
  if (limit > 0.0) std::printf(" (limit %.0fs)", limit);
  std::printf("\n");
  std::fflush(stdout);
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ModelSpec model(int n, double alpha, double beta) {
  ModelSpec s;
  s.n_sites = n;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

quench::EnsembleSpec ensemble(int realizations, std::uint64_t seed, int threads) {
  quench::EnsembleSpec e;
  e.n_realizations = realizations;
  e.master_seed = seed;
  e.parallelism = threads;
  return e;
}

std::string fmt(const char* f, double x) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void a1(int threads) {
  const auto t0 = Clock::now();
  const auto catalog = oracle::all_monomials(4, 4);
  double worst = 0.0;
  int checked = 0;
  for (int n = 1; n <= 4; ++n)
    for (double alpha : {0.5, 2.0})
      for (double beta : {0.5, 1.5}) {
        const auto spec = model(n, alpha, beta);
        std::vector<double> err(20, 0.0);
        parallel_for(20, threads, [&](std::size_t k) {
          const auto r = sample_disorder(spec, derive_seed(0xA1 + n, k));
          const auto g = oracle::gibbs(r, beta);
          const auto state = exact::GibbsState::compute(r, beta);
          const auto want = oracle::replica_averages(catalog, g);
          for (std::size_t j = 0; j < catalog.size(); ++j)
            err[k] = std::max(err[k], std::abs(moments::replica_average(catalog[j], state) - want[j]));
        });
        for (double e : err) worst = std::max(worst, e);
        checked += 20 * static_cast<int>(catalog.size());
      }
  report("A1", worst <= 1e-12, since(t0), 60,
         fmt("factorization vs replica enumeration: max|diff|=%.3g (tol 1e-12)", worst) + ", " +
             std::to_string(catalog.size()) + " monomials, " + std::to_string(checked) + " comparisons");
}

void a2(int threads) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int n : {4, 8, 12}) {
    const auto spec = model(n, 2.0, 1.0);
    std::vector<id::LinearIdentity> ids;
    for (int s = 1; s <= 5; ++s) {
      for (int a = 1; a <= s; ++a) ids.push_back(id::gg_terms(s, a, id::PhiSpec::one(s)));
      ids.push_back(id::gg_pair_terms(s, id::PhiSpec::one(s)));
      ids.push_back(id::four_overlap_terms(s, id::PhiSpec::one(s)));
    }
    std::vector<double> err(10, 0.0);
    parallel_for(err.size(), threads, [&](std::size_t k) {
      const auto state = exact::GibbsState::compute(sample_disorder(spec, derive_seed(0xA2 + n, k)), spec.beta);
      for (const auto& identity : ids) {
        const auto c = identity.combine(identity.column_values(state));
        err[k] = std::max(err[k], std::abs(c[0] - c[1]));
      }
    });
    for (double e : err) worst = std::max(worst, e);
  }
  report("A2", worst <= 1e-12, since(t0), 60,
         fmt("gg/gg_pair/four_overlap with phi=1, s<=5, N in {4,8,12}, per realization: max|res|=%.3g (tol 1e-12)",
             worst));
}

using Key = std::pair<LabeledMonomial, bool>;
using TermMap = std::map<Key, expansion::Rational>;

void add(TermMap& m, const LabeledMonomial& mono, bool attached, const expansion::Rational& c) {
  auto& v = m[{mono.normalized(), attached}];
  v += c;
  if (v == 0) m.erase({mono.normalized(), attached});
}

TermMap as_map(const std::vector<expansion::ExpansionTerm>& terms) {
  TermMap m;
  for (const auto& t : terms) add(m, t.monomial, t.phi_attached, t.coefficient);
  return m;
}

TermMap order_two(int s) {
  TermMap m;
  add(m, {}, true, 1);
  add(m, overlap({1, s + 1}), true, -s);
  for (int a = 2; a <= s; ++a) add(m, overlap({1, a}), true, 1);
  add(m, {}, false, -1);
  add(m, overlap({1, 2}), false, 1);
  return m;
}

TermMap order_four(int s) {
  using expansion::Rational;
  TermMap m;
  const Rational s2(s * (s + 1), 2), s3(s * (s + 1) * (s + 2), 6);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) add(m, overlap({a, b}), true, 1);
  add(m, overlap({s + 1, s + 2}), true, s2);
  for (int a = 2; a <= s; ++a) add(m, overlap({a, s + 1}), true, -s);
  add(m, overlap({1, s + 1, s + 2, s + 3}), true, -s3);
  for (int a = 2; a <= s; ++a) add(m, overlap({1, a, s + 1, s + 2}), true, s2);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b) add(m, overlap({1, a, b, s + 1}), true, -s);
  for (int a = 2; a <= s; ++a)
    for (int b = a + 1; b <= s; ++b)
      for (int c = b + 1; c <= s; ++c) add(m, overlap({1, a, b, c}), true, 1);
  add(m, overlap({1, 2}), false, -1);
  add(m, overlap({1, 2, 3, 4}), false, 1);
  return m;
}

void a3() {
  const auto t0 = Clock::now();
  int ff_ok = 0, ff_total = 0, ord_ok = 0, ord_total = 0;
  const auto log_terms = expansion::formal_log_expansion(8);
  for (int r = 1; r <= 3; ++r)
    for (int s = 1; r + s <= 4; ++s) {
      ++ff_total;
      ff_ok += expansion::sharing_coefficients(log_terms, 2 * r, 2 * s) == expansion::first_family_terms(r, s);
    }
  for (int s = 1; s <= 6; ++s) {
    ord_total += 2;
    ord_ok += as_map(expansion::energy_expansion_terms(2, s)) == order_two(s);
    ord_ok += as_map(expansion::energy_expansion_terms(4, s)) == order_four(s);
  }
  report("A3", ff_ok == ff_total && ord_ok == ord_total, since(t0), 10,
         "first_family == log extraction " + std::to_string(ff_ok) + "/" + std::to_string(ff_total) +
             " (r+s<=4); order-2/4 term multisets " + std::to_string(ord_ok) + "/" + std::to_string(ord_total) +
             " (s=1..6), exact rational equality");
}

void a4(int threads) {
  const auto t0 = Clock::now();
  const int realizations = 500;
  const auto phi2 = id::PhiSpec::parse("q{1,2}^2", 2);
  const auto phi4 = id::PhiSpec::parse("q{1,2}^2", 4);
  struct Row {
    const char* name;
    std::function<id::IdentityReport(const ModelSpec&, const quench::EnsembleSpec&)> run;
    bool perturbed = false;
  };
  const std::vector<Row> rows{
      {"gg", [&](const ModelSpec& m, const quench::EnsembleSpec& e) { return id::gg_residual(2, 2, phi2, m, e); }},
      {"first_family",
       [](const ModelSpec& m, const quench::EnsembleSpec& e) { return id::first_family_residual(1, 1, 2, 2, m, e); }},
      {"four_overlap",
       [&](const ModelSpec& m, const quench::EnsembleSpec& e) { return id::four_overlap_residual(4, phi4, m, e); }},
      {"stochastic_stability",
       [](const ModelSpec& m, const quench::EnsembleSpec& e) {
         return id::stochastic_stability_residual(m, {0.5, 0.5}, e);
       }},
      {"factorization",
       [](const ModelSpec& m, const quench::EnsembleSpec& e) { return id::factorization_residual(m, 0.6, 0.6, e); }},
      {"magnetization_sa",
       [](const ModelSpec& m, const quench::EnsembleSpec& e) { return id::magnetization_sa_residual(m, e); }, true},
  };
  bool all = true;
  std::string detail;
  for (const auto& row : rows) {
    double res[2];
    const int sizes[2] = {6, 12};
    for (int k = 0; k < 2; ++k) {
      auto spec = model(sizes[k], 2.0, 1.0);
      if (row.perturbed) spec.perturbations = {{1, 0.5, 0.7, 1.0}, {1, 0.5, 0.7, 1.0}};
      res[k] = row.run(spec, ensemble(realizations, 2024, threads)).residual;
    }
    const bool ok = std::abs(res[1]) < std::abs(res[0]);
    all = all && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "\n    %-21s N=6 %+.4e  N=12 %+.4e  %s", row.name, res[0], res[1],
                  ok ? "decreasing" : "NOT decreasing");
    detail += buf;
  }
  double worst = 0.0;
  for (int n : {6, 8, 12}) {
    const double N = n, expect = -1.0 / (N * N) + 1.0 / (N * N * N);
    const auto spec = model(n, 2.0, 0.0);
    const auto ens = ensemble(20, 2024, threads);
    worst = std::max(worst, std::abs(id::gg_residual(2, 2, phi2, spec, ens).residual - expect));
    worst = std::max(worst, std::abs(id::first_family_residual(1, 1, 2, 2, spec, ens).residual - expect));
  }
  all = all && worst <= 1e-14;
  detail = "alpha=2 beta=1, " + std::to_string(realizations) + " realizations/size, |res(12)| < |res(6)|; " +
           fmt("beta=0 rows vs -1/N^2+1/N^3: max|diff|=%.3g (tol 1e-14)", worst) + detail;
  report("A4", all, since(t0), 1800, detail);
}

void a5(int threads) {
  const auto t0 = Clock::now();
  const auto r = id::pressure_derivative_check(model(6, 1.0, 1.0), 0.4, ensemble(200, 55, threads));
  const double diff = std::abs(r.lhs - r.rhs);
  report("A5", diff <= 1e-6, since(t0), 300,
         fmt("d/dbeta' E ln Z vs leave-one-out form at N=6, beta'=0.4, 200 realizations: |lhs-rhs|=%.3g (tol 1e-6)",
             diff));
}

void a6(int threads) {
  const auto t0 = Clock::now();
  const auto spec = model(8, 2.0, 1.0);
  const int n = 50;
  const std::vector<ReplicaMonomial> monos{canonicalize(parse_monomial("q{1,2}^2")),
                                           canonicalize(parse_monomial("q{1,2}^2*q{1,3}^2"))};
  const auto ens = ensemble(n, 606, threads);
  std::vector<std::vector<double>> diff(n, std::vector<double>(2)), var(n, std::vector<double>(2)),
      exact_v(n, std::vector<double>(2));
  parallel_for(n, threads, [&](std::size_t k) {
    const auto r = quench::realization(spec, ens, k);
    const auto state = exact::GibbsState::compute(r, spec.beta);
    sampler::ChainConfig cfg;
    cfg.seed = derive_seed(r.seed, 0x6d63);
    const auto mc = sampler::mc_estimate_monomials(r, spec.beta, monos, 3, cfg);
    for (int j = 0; j < 2; ++j) {
      exact_v[k][j] = moments::replica_average(monos[j], state);
      diff[k][j] = mc[j].mean - exact_v[k][j];
      var[k][j] = mc[j].stderr * mc[j].stderr;
    }
  });
  bool ok = true;
  std::string detail = "N=8 alpha=2 beta=1, default chains, 50 realizations:";
  for (int j = 0; j < 2; ++j) {
    double d = 0.0, v = 0.0, e = 0.0;
    for (int k = 0; k < n; ++k) {
      d += diff[k][j] / n;
      v += var[k][j] / (double(n) * n);
      e += exact_v[k][j] / n;
    }
    const double z = std::abs(d) / std::sqrt(v);
    ok = ok && z < 4.0;
    char buf[200];
    std::snprintf(buf, sizeof buf, " %s exact=%.6f mc-exact=%+.2e (%.2f sigma, tol 4)", monos[j].to_string().c_str(),
                  e, d, z);
    detail += buf;
  }
  report("A6", ok, since(t0), 600, detail);
}

void a7() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int n : {4, 8, 16}) {
    const double N = n;
    const auto state = exact::GibbsState::compute(sample_disorder(model(n, 2.0, 0.0), 7), 0.0);
    const std::vector<std::pair<const char*, double>> cases{{"q{1,2}^2", 1.0 / N},
                                                            {"q{1,2}^4", 3.0 / (N * N) - 2.0 / (N * N * N)},
                                                            {"q{1,2}^2*q{3,4}^2", 1.0 / (N * N)},
                                                            {"q{1,2}^2*q{1,3}^2", 1.0 / (N * N)}};
    for (const auto& [text, want] : cases)
      worst = std::max(worst,
                       std::abs(moments::replica_average(canonicalize(parse_monomial(text)), state) - want));
  }
  report("A7", worst <= 1e-12, since(t0), 60,
         fmt("beta=0 closed forms, N in {4,8,16}: max|diff|=%.3g (tol 1e-12)", worst));
}

std::string capture(const std::string& cmd, int& status) {
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  status = pclose(pipe);
  return out;
}

void a8() {
  const auto t0 = Clock::now();
  const std::string bin = SELFAVG_CLI_PATH;
  const std::vector<std::string> invocations{
      "check --identity gg --s 2 --a 1 --phi one --n 8 --alpha 2 --beta 1 --realizations 100 --seed 7",
      "check --identity four_overlap --s 4 --phi q{1,2}^2 --n 8 --alpha 2 --realizations 50 --seed 3",
      "check --identity stochastic_stability --alpha-prime 0.5 --beta-prime 0.5 --n 6 --realizations 40 --seed 5",
      "check --identity pressure_derivative --beta-prime 0.4 --n 6 --realizations 20 --seed 9",
      "sweep --identity first_family --r 1 --s 1 --sizes 4,6,8 --alpha 2 --realizations 60 --seed 11",
      "moment --monomial q{1,2}^2*q{1,3}^2 --backend mc --sweeps 2000 --burn-in 100 --n 8 --realizations 8 --seed 13",
      "pressure --n 8 --alpha 2 --realizations 30 --seed 17",
      "expand --order 6 --s 3 --format json",
  };
  int same = 0;
  for (const auto& args : invocations) {
    int s1 = 0, s8 = 0, s1b = 0;
    const auto out1 = capture(bin + " " + args + " --parallelism 1", s1);
    const auto out8 = capture(bin + " " + args + " --parallelism 8", s8);
    const auto out1b = capture(bin + " " + args + " --parallelism 1", s1b);
    const bool ok = s1 == 0 && s8 == 0 && s1b == 0 && !out1.empty() && out1 == out8 && out1 == out1b;
    same += ok;
    if (!ok) std::printf("    differs or failed: %s\n", args.c_str());
  }
  report("A8", same == static_cast<int>(invocations.size()), since(t0), 0,
         std::to_string(same) + "/" + std::to_string(invocations.size()) +
             " CLI invocations byte-identical across repeats and parallelism 1 vs 8");
}

}  // namespace

int main() {
  const int threads = std::max(4, default_parallelism());
  a1(threads);
  a2(threads);
  a3();
  a4(threads);
  a5(threads);
  a6(threads);
  a7();
  a8();
  std::printf("%s (%d failing)\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
