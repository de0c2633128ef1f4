#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "run_config.hpp"
#include "selfavg/errors.hpp"
#include "selfavg/expansion.hpp"
#include "selfavg/identities.hpp"
#include "selfavg/moments.hpp"
#include "selfavg/quench.hpp"
#include "selfavg/series.hpp"

namespace selfavg::cli {

namespace {

namespace id = selfavg::identities;

struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

const std::vector<FlagBinding>& bindings() {
  static const std::vector<FlagBinding> b{
      {"--n", "model.n", "number of sites"},
      {"--alpha", "model.alpha", "coupling density per site"},
      {"--beta", "model.beta", "inverse temperature"},
      {"--arities", "model.arities", "comma-separated interaction arities"},
      {"--weights", "model.weights", "comma-separated mixing weights (squares sum to 1)"},
      {"--realizations", "ensemble.realizations", "disorder realizations"},
      {"--seed", "ensemble.seed", "master seed"},
      {"--parallelism", "ensemble.parallelism", "worker threads"},
      {"--backend", "ensemble.backend", "exact or mc"},
      {"--sweeps", "ensemble.sweeps", "Monte Carlo sweeps per chain"},
      {"--burn-in", "ensemble.burn_in", "burn-in sweeps"},
      {"--thinning", "ensemble.thinning", "sweeps between measurements"},
      {"--chains", "ensemble.chains", "chains per realization (0: one per replica)"},
      {"--enumeration-cap", "ensemble.enumeration_cap", "largest N for exact enumeration"},
      {"--reduction-cap", "ensemble.reduction_cap", "largest site-index count in a moment"},
      {"--identity", "task.identity", "identity id"},
      {"--s", "task.s", "replica count s"},
      {"--a", "task.a", "distinguished replica a"},
      {"--r", "task.r", "first-family r"},
      {"--pow-r", "task.pow_r", "first-family power of q_r"},
      {"--pow-s", "task.pow_s", "first-family power of q_s"},
      {"--phi", "task.phi", "test function: one or an overlap monomial"},
      {"--beta-prime", "task.beta_prime", "perturbation strength"},
      {"--beta-prime-2", "task.beta_prime_2", "second perturbation strength (factorization)"},
      {"--alpha-prime", "task.alpha_prime", "perturbation rate"},
      {"--monomial", "task.monomial", "overlap monomial, e.g. q{1,2}^2*q{1,3}^2"},
      {"--sizes", "task.sizes", "comma-separated sizes for sweep"},
      {"--order", "task.order", "expansion order 2n"},
      {"--measure", "task.measure", "unperturbed or perturbed"},
      {"--view", "task.view", "expand view: terms, reduced, printed, compare"},
      {"--format", "output.format", "json, csv or text"},
      {"--output", "output.path", "write the result to this file"},
      {"--manifest", "output.manifest", "write a run manifest (sweep)"},
  };
  return b;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int int_param(const RunConfig& cfg, const std::string& key, long fallback) {
  const long v = cfg.get_int(key, fallback);
  if (v < -1000000 || v > 1000000) throw ValidationError(key + ": value out of range");
  return static_cast<int>(v);
}

int required_int(const RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw ValidationError(key + ": required for this command");
  return int_param(cfg, key, 0);
}

id::EvalOptions eval_options(const RunConfig& cfg) {
  const auto m = cfg.get_string("task.measure", "unperturbed");
  if (m != "unperturbed" && m != "perturbed")
    throw ValidationError("task.measure: expected unperturbed or perturbed, got '" + m + "'");
  return {m == "perturbed"};
}

id::PhiSpec phi_param(const RunConfig& cfg, int s) { return id::PhiSpec::parse(cfg.get_string("task.phi", "one"), s); }

id::IdentityReport run_identity(const RunConfig& cfg, const ModelSpec& spec, const quench::EnsembleSpec& ens) {
  if (!cfg.has("task.identity")) throw ValidationError("task.identity: required for this command");
  const auto name = cfg.get_string("task.identity", "");
  if (name == "order_probe") {
    const int s = int_param(cfg, "task.s", 1);
    return id::order_probe(required_int(cfg, "task.order"), s, phi_param(cfg, s), spec, ens);
  }
  const auto opts = eval_options(cfg);
  switch (id::parse_identity(name)) {
    case id::IdentityId::gg: {
      const int s = int_param(cfg, "task.s", 1);
      return id::gg_residual(s, int_param(cfg, "task.a", 1), phi_param(cfg, s), spec, ens, opts);
    }
    case id::IdentityId::gg_pair: {
      const int s = int_param(cfg, "task.s", 2);
      return id::gg_pair_residual(s, phi_param(cfg, s), spec, ens, opts);
    }
    case id::IdentityId::first_family:
      return id::first_family_residual(int_param(cfg, "task.r", 1), int_param(cfg, "task.s", 1),
                                       int_param(cfg, "task.pow_r", 2), int_param(cfg, "task.pow_s", 2), spec, ens,
                                       opts);
    case id::IdentityId::four_overlap: {
      const int s = int_param(cfg, "task.s", 4);
      return id::four_overlap_residual(s, phi_param(cfg, s), spec, ens, opts);
    }
    case id::IdentityId::magnetization_sa:
      return id::magnetization_sa_residual(spec, ens);
    case id::IdentityId::stochastic_stability:
      return id::stochastic_stability_residual(
          spec, {cfg.get_double("task.alpha_prime", 0.5), cfg.get_double("task.beta_prime", 0.5)}, ens);
    case id::IdentityId::factorization: {
      const double b1 = cfg.get_double("task.beta_prime", 0.6);
      return id::factorization_residual(spec, b1, cfg.get_double("task.beta_prime_2", b1), ens, opts);
    }
    case id::IdentityId::pressure_derivative:
      return id::pressure_derivative_check(spec, cfg.get_double("task.beta_prime", 0.4), ens,
                                           cfg.get_double("task.alpha_prime", -1.0));
  }
  throw ValidationError("task.identity: unsupported identity '" + name + "'");
}

nlohmann::ordered_json with_context(nlohmann::ordered_json j, const RunConfig& cfg) {
  j["code_version"] = SELFAVG_VERSION;
  j["config"] = cfg.echo();
  return j;
}

std::string cmd_check(const RunConfig& cfg) {
  const auto spec = cfg.model();
  const auto ens = cfg.ensemble();
  const auto report = run_identity(cfg, spec, ens);
  const auto format = cfg.get_string("output.format", "json");
  if (format == "csv") return quench::sweep_csv({{spec.n_sites, report.summary()}});
  if (format != "json") throw ValidationError("output.format: check supports json or csv, got '" + format + "'");
  return with_context(report.to_json(), cfg).dump(2) + "\n";
}

std::vector<int> sizes_param(const RunConfig& cfg, int fallback) {
  std::vector<int> sizes;
  for (double v : cfg.get_list("task.sizes", {static_cast<double>(fallback)})) {
    if (v != std::floor(v) || v < 1 || v > 64) throw ValidationError("task.sizes: sizes must be integers in [1, 64]");
    sizes.push_back(static_cast<int>(v));
  }
  return sizes;
}

void write_file(const std::string& path, const std::string& text, const std::string& key) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError(key + ": cannot write '" + path + "'");
  f << text;
}

std::string cmd_sweep(const RunConfig& cfg) {
  const auto spec = cfg.model();
  const auto ens = cfg.ensemble();
  const auto sizes = sizes_param(cfg, spec.n_sites);
  const auto rows = quench::sweep_sizes(
      [&](const ModelSpec& s, const quench::EnsembleSpec& e) { return run_identity(cfg, s, e).summary(); }, spec,
      sizes, ens);
  if (cfg.has("output.manifest"))
    write_file(cfg.get_string("output.manifest", ""), quench::run_manifest(spec, ens, rows), "output.manifest");
  const auto format = cfg.get_string("output.format", "csv");
  if (format == "csv") return quench::sweep_csv(rows);
  if (format == "json") return quench::run_manifest(spec, ens, rows);
  throw ValidationError("output.format: sweep supports csv or json, got '" + format + "'");
}

std::string cmd_moment(const RunConfig& cfg) {
  if (!cfg.has("task.monomial")) throw ValidationError("task.monomial: required for moment");
  const auto text = cfg.get_string("task.monomial", "");
  const auto mono = canonicalize(parse_monomial(text));
  const auto spec = cfg.model();
  const auto ens = cfg.ensemble();
  const auto est = moments::estimate(mono, spec, ens);
  nlohmann::ordered_json j;
  j["monomial"] = text;
  j["canonical"] = mono.to_string();
  j["value"] = est.value;
  j["stderr"] = est.stderr;
  j["disorder_stderr"] = est.disorder_stderr;
  j["chain_stderr"] = est.chain_stderr;
  j["n_realizations"] = est.n_realizations;
  j["seed"] = ens.master_seed;
  j["params"] = {{"N", spec.n_sites},
                 {"alpha", spec.alpha},
                 {"beta", spec.beta},
                 {"backend", quench::backend_name(ens.backend)}};
  return with_context(j, cfg).dump(2) + "\n";
}

std::string cmd_coeffs(const RunConfig& cfg) {
  const int r = required_int(cfg, "task.r");
  const int s = required_int(cfg, "task.s");
  if (r < 1 || s < 1) throw ValidationError("task.r/task.s: must be >= 1");
  std::ostringstream out;
  for (const auto& c : expansion::first_family_terms(r, s))
    out << "a=" << c.a << " coeff=" << series::to_string(c.coefficient) << "\n";
  return out.str();
}

std::string cmd_expand(const RunConfig& cfg) {
  const int order = required_int(cfg, "task.order");
  const int s = int_param(cfg, "task.s", 1);
  const auto view = cfg.get_string("task.view", "terms");
  const auto format = cfg.get_string("output.format", "text");
  if (format != "text" && format != "json")
    throw ValidationError("output.format: expand supports text or json, got '" + format + "'");
  const bool json = format == "json";

  if (view == "terms" || view == "printed") {
    const auto terms = view == "terms" ? expansion::energy_expansion_terms(order, s)
                                       : expansion::printed_generic_order_terms(order, s);
    return json ? expansion::to_json(terms) + "\n" : expansion::to_text(terms);
  }
  if (view == "reduced") {
    const auto red = expansion::cancel_two_overlaps(expansion::energy_expansion_terms(order, s), s);
    if (json) {
      nlohmann::ordered_json j;
      j["cancelled"] = red.cancelled();
      j["phi_coefficient"] = series::to_string(red.phi_coefficient);
      j["x_coefficient"] = series::to_string(red.x_coefficient);
      auto y = nlohmann::ordered_json::object();
      for (const auto& [ab, c] : red.y_coefficients)
        y[std::to_string(ab.first) + "," + std::to_string(ab.second)] = series::to_string(c);
      j["y_coefficients"] = y;
      j["remaining"] = nlohmann::ordered_json::parse(expansion::to_json(red.remaining));
      return j.dump(2) + "\n";
    }
    std::ostringstream out;
    out << "two-overlap terms cancelled: " << (red.cancelled() ? "yes" : "no") << "\n";
    out << "<phi> coefficient: " << series::to_string(red.phi_coefficient) << "\n";
    out << "<q12^2><phi> coefficient: " << series::to_string(red.x_coefficient) << "\n";
    for (const auto& [ab, c] : red.y_coefficients)
      out << "<q{" << ab.first << "," << ab.second << "}^2*phi> coefficient: " << series::to_string(c) << "\n";
    out << expansion::to_text(red.remaining);
    return out.str();
  }
  if (view == "compare") {
    const auto rows = expansion::compare_printed_generic_order(order, s);
    if (json) {
      auto j = nlohmann::ordered_json::array();
      for (const auto& r : rows)
        j.push_back({{"l", r.l},
                     {"with_replica_one", r.with_replica_one},
                     {"printed", series::to_string(r.printed)},
                     {"derived", series::to_string(r.derived)},
                     {"printed_monomial", r.printed_monomial},
                     {"derived_monomial", r.derived_monomial}});
      return j.dump(2) + "\n";
    }
    std::ostringstream out;
    for (const auto& r : rows)
      out << "l=" << r.l << " eps=" << (r.with_replica_one ? 1 : 0) << " printed=" << series::to_string(r.printed)
          << " " << r.printed_monomial << " derived=" << series::to_string(r.derived) << " " << r.derived_monomial
          << (r.coefficient_matches() && r.monomial_matches() ? " match" : " differ") << "\n";
    return out.str();
  }
  throw ValidationError("task.view: expected terms, reduced, printed or compare, got '" + view + "'");
}

std::string cmd_pressure(const RunConfig& cfg) {
  const auto spec = cfg.model();
  const auto ens = cfg.ensemble();
  if (ens.backend != quench::Backend::exact) throw ValidationError("ensemble.backend: pressure needs the exact backend");
  quench::EnsembleTask task;
  task.reported = {"p"};
  task.per_realization = [&](const DisorderRealization& r, std::size_t) {
    return std::vector<double>{exact::log_partition(r, spec.beta, ens.exact) / spec.n_sites};
  };
  const auto agg = quench::run_ensemble(task, spec, ens);
  const auto& p = agg.at("p");
  const auto format = cfg.get_string("output.format", "text");
  if (format == "json") {
    nlohmann::ordered_json j;
    j["p"] = p.mean;
    j["stderr"] = p.stderr;
    j["n_realizations"] = agg.n_realizations;
    j["seed"] = ens.master_seed;
    return with_context(j, cfg).dump(2) + "\n";
  }
  if (format != "text") throw ValidationError("output.format: pressure supports text or json, got '" + format + "'");
  return "p = " + fmt17(p.mean) + "\nstderr = " + fmt17(p.stderr) + "\nn_realizations = " +
         std::to_string(agg.n_realizations) + "\n";
}

std::string annotate(const std::string& what, const std::map<std::string, std::string>& flag_of) {
  for (const auto& [key, flag] : flag_of)
    if (what.rfind(key, 0) == 0) return what + " (set by " + flag + ")";
  return what;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-size checks of overlap identities in diluted spin glasses", "selfavg"};
  app.set_version_flag("--version", SELFAVG_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key-value configuration file");
  std::map<std::string, std::string> flag_values;
  for (const auto& b : bindings()) app.add_option(b.flag, flag_values[b.key], b.help);
  std::vector<std::string> perts;
  app.add_option("--pert", perts, "perturbation 'arity,rate,strength[,weight]' (repeatable)");

  const std::map<std::string, const char*> subcommands{
      {"check", "evaluate one identity and print its report as JSON"},
      {"sweep", "evaluate one identity over --sizes and print CSV"},
      {"moment", "quenched average of one overlap monomial"},
      {"coeffs", "exact first-family coefficients for --r, --s"},
      {"expand", "order-2n energy-expansion term list for --order, --s"},
      {"pressure", "quenched pressure (1/N) E ln Z"},
  };
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(SELFAVG_VERSION) + "\n" : app.help());
      return exit_ok;
    }
    err << "error: " << e.what() << "\n";
    return exit_validation;
  }

  std::map<std::string, std::string> flag_of;
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    for (const auto& b : bindings()) {
      if (app.count(b.flag) == 0) continue;
      cfg.set(b.key, flag_values[b.key]);
      flag_of[b.key] = b.flag;
    }
    if (app.count("--pert") > 0) {
      if (perts.size() > 8) throw ValidationError("--pert: at most 8 perturbations");
      cfg.erase_prefix("perturbations.");
      for (std::size_t k = 0; k < perts.size(); ++k) {
        cfg.set("perturbations.pert" + std::to_string(k + 1), perts[k]);
        flag_of["perturbations.pert" + std::to_string(k + 1)] = "--pert";
      }
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    std::string result;
    if (cmd == "check") result = cmd_check(cfg);
    else if (cmd == "sweep") result = cmd_sweep(cfg);
    else if (cmd == "moment") result = cmd_moment(cfg);
    else if (cmd == "coeffs") result = cmd_coeffs(cfg);
    else if (cmd == "expand") result = cmd_expand(cfg);
    else result = cmd_pressure(cfg);

    if (cfg.has("output.path")) write_file(cfg.get_string("output.path", ""), result, "output.path");
    else out << result;
    return exit_ok;
  } catch (const CapacityError& e) {
    err << "capacity error: " << annotate(e.what(), flag_of) << "\n";
    return exit_capacity;
  } catch (const ValidationError& e) {
    err << "validation error: " << annotate(e.what(), flag_of) << "\n";
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace selfavg::cli
