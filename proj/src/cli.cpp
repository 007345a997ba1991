#include "transcp/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "transcp/data.hpp"
#include "transcp/error.hpp"
#include "transcp/estimator.hpp"
#include "transcp/families.hpp"
#include "transcp/inference.hpp"
#include "transcp/scoretest.hpp"
#include "transcp/sim.hpp"

namespace transcp {

namespace {

using nlohmann::ordered_json;

struct Options {
  std::string family = "cox";
  std::string data;
  std::optional<std::string> covariates;
  std::optional<int> q;
  std::optional<double> tau;
  std::optional<double> a;
  std::optional<double> b;
  double inner_frac = 0.8;
  int B = 250;
  int draws = 2000;
  int M = 250;
  int reps = 250;
  int n = 300;
  double eta0 = 0.0;
  std::optional<double> level;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
  std::string format;
};

// Usage problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ordered_json vec(const Eigen::VectorXd& v) {
  ordered_json j = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

ordered_json warnings_json(const std::vector<std::string>& w) {
  ordered_json j = ordered_json::array();
  for (const auto& s : w) j.push_back(s);
  return j;
}

Dataset load(const Options& o) {
  LoadOptions lo;
  lo.q = o.q;
  lo.tau = o.tau;
  return load_dataset_files(o.data, o.covariates, lo);
}

FitConfig fit_config(const Options& o, const Dataset& ds) {
  FitConfig cfg;
  cfg.threads = o.threads;
  const auto [da, db] = default_threshold_range(ds, o.inner_frac);
  cfg.a = o.a.value_or(da);
  cfg.b = o.b.value_or(db);
  return cfg;
}

std::uint64_t need_seed(const Options& o) {
  if (!o.seed) throw UsageError("--seed is required for this command");
  return *o.seed;
}

void report_validation(const Dataset& ds, const FitConfig& cfg, std::ostream& err) {
  for (const auto& w : validate(ds, *cfg.a, *cfg.b).warnings) err << "warning: " << w << '\n';
}

ordered_json ci_json(const ChangePointCI& ci) {
  return ordered_json{{"level", ci.level},   {"lower", ci.lower}, {"upper", ci.upper},
                      {"h_hat", ci.h_hat},   {"q_low", ci.q_low}, {"q_high", ci.q_high},
                      {"c1", ci.c1},         {"c2", ci.c2},       {"draws", ci.vstar_draws}};
}

ordered_json fit_json(const FitResult& fit, const Dataset& ds, const TransformFamily& fam) {
  ordered_json zetas = ordered_json::array();
  ordered_json pls = ordered_json::array();
  for (const auto& [z, pl] : fit.profile_curve) {
    zetas.push_back(z);
    pls.push_back(pl);
  }
  const ordered_json profile{{"zeta", zetas}, {"loglik", pls}};
  return ordered_json{{"family", fam.to_string()},
                      {"n", ds.n()},
                      {"p", ds.p},
                      {"q", ds.q},
                      {"a", fit.a},
                      {"b", fit.b},
                      {"zeta_hat", fit.theta_hat.zeta},
                      {"loglik", fit.loglik},
                      {"converged", fit.converged},
                      {"grid_failures", fit.grid_failures},
                      {"profile", profile}};
}

int cmd_fit(const Options& o, bool with_psi, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = need_seed(o);
  const double level = o.level.value_or(0.95);
  const TransformFamily fam = TransformFamily::parse(o.family);
  const Dataset ds = load(o);
  const FitConfig cfg = fit_config(o, ds);
  report_validation(ds, cfg, err);
  const FitResult fit = fit_npmle(ds, fam, cfg);
  std::vector<std::string> warnings = fit.warnings;
  ordered_json j{{"command", with_psi ? "fit" : "ci"}, {"seed", seed}};
  j.update(fit_json(fit, ds, fam));

  if (with_psi) {
    // Separate streams for the two bootstraps.
    const PsiBootstrap boot = bootstrap_psi(ds, fam, fit, o.B, WeightScheme::exp_truncated(),
                                            stream_rng(seed, 0)(), level, cfg);
    ordered_json params = ordered_json::array();
    for (std::size_t k = 0; k < boot.names.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      params.push_back({{"name", boot.names[k]},
                        {"estimate", boot.estimate[i]},
                        {"se", boot.se[i]},
                        {"lower", boot.lower[i]},
                        {"upper", boot.upper[i]}});
    }
    j["parameters"] = params;
    j["A"] = {{"times", boot.A_times},
              {"estimate", boot.A_estimate},
              {"se", boot.A_se},
              {"lower", boot.A_lower},
              {"upper", boot.A_upper}};
    j["bootstrap"] = {{"B", o.B}, {"replicates", boot.replicates}, {"failures", boot.failures}, {"level", level}};
    warnings.insert(warnings.end(), boot.warnings.begin(), boot.warnings.end());
  } else {
    j["gamma"] = vec(fit.theta_hat.psi.gamma());
  }
  const ChangePointCI ci = cp_confidence_interval(ds, fam, fit, level, o.draws, stream_rng(seed, 1)(), o.threads);
  j["zeta_ci"] = ci_json(ci);
  j["warnings"] = warnings_json(warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_test(const Options& o, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = need_seed(o);
  const double level = o.level.value_or(0.05);
  const TransformFamily fam = TransformFamily::parse(o.family);
  const Dataset ds = load(o);
  const FitConfig cfg = fit_config(o, ds);
  report_validation(ds, cfg, err);
  const TestResult r = run_test(ds, fam, *cfg.a, *cfg.b, o.M, WeightScheme::exp_truncated(), level, seed, cfg);
  const ordered_json j{{"command", "test"},
                       {"seed", seed},
                       {"family", fam.to_string()},
                       {"n", ds.n()},
                       {"a", r.a},
                       {"b", r.b},
                       {"level", r.level},
                       {"t_sup", r.t_sup},
                       {"t_int", r.t_int},
                       {"crit_sup", r.crit_sup},
                       {"crit_int", r.crit_int},
                       {"p_sup", r.p_sup},
                       {"p_int", r.p_int},
                       {"reject_sup", r.reject_sup},
                       {"reject_int", r.reject_int},
                       {"M", r.M},
                       {"dropped", r.dropped},
                       {"excluded_points", r.excluded},
                       {"vhat_condition", r.vhat_condition},
                       {"null_beta", vec(r.null_fit.psi.beta)},
                       {"null_loglik", r.null_fit.loglik},
                       {"warnings", warnings_json(r.warnings)}};
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const std::uint64_t seed = need_seed(o);
  Scenario scn = Scenario::table1(TransformFamily::parse(o.family), o.eta0, o.n);
  scn.inner_frac = o.inner_frac;
  Rng rng = stream_rng(seed, 0);
  write_dataset(simulate_dataset(scn, rng), out);
  return 0;
}

int cmd_table(const Options& o, std::ostream& out, std::ostream& err) {
  Table1Config cfg;
  cfg.seed = need_seed(o);
  cfg.n = o.n;
  cfg.reps = o.reps;
  cfg.M = o.M;
  cfg.level = o.level.value_or(0.05);
  cfg.threads = o.threads;
  const Table1 table = reproduce_table1(cfg, &err);
  if (o.format == "json") {
    out << table1_json(table) << '\n';
  } else {
    write_table1_csv(table, out);
  }
  return 0;
}

void add_data_options(CLI::App* sub, Options& o) {
  sub->add_option("--family", o.family, "cox, odds-rate:<c> or bent:<c>")->capture_default_str();
  sub->add_option("--data", o.data, "subjects CSV: id,time,status,y,z1..zd")->required();
  sub->add_option("--covariates", o.covariates, "long-format covariate CSV: id,start,z1..zd");
  sub->add_option("--q", o.q, "number of trailing covariates interacting with the threshold");
  sub->add_option("--tau", o.tau, "study horizon");
  sub->add_option("--a", o.a, "lower end of the threshold range");
  sub->add_option("--b", o.b, "upper end of the threshold range");
  sub->add_option("--inner-frac", o.inner_frac, "default range: inner fraction of Y")->capture_default_str();
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output file (default standard output)");
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Change-point transformation models for censored survival data"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags win");
  app.require_subcommand(1);

  CLI::App* fit = app.add_subcommand("fit", "NPMLE with bootstrap intervals for all parameters");
  add_data_options(fit, o);
  add_common(fit, o);
  fit->add_option("--B", o.B, "weighted-bootstrap replicates")->capture_default_str();
  fit->add_option("--draws", o.draws, "v* draws for the threshold interval")->capture_default_str();
  fit->add_option("--level", o.level, "confidence level (default 0.95)");

  CLI::App* ci = app.add_subcommand("ci", "NPMLE and the threshold confidence interval");
  add_data_options(ci, o);
  add_common(ci, o);
  ci->add_option("--draws,--B", o.draws, "v* draws")->capture_default_str();
  ci->add_option("--level", o.level, "confidence level (default 0.95)");

  CLI::App* test = app.add_subcommand("test", "sup and integrated score tests for a change-point");
  add_data_options(test, o);
  add_common(test, o);
  test->add_option("--M", o.M, "bootstrap replicates")->capture_default_str();
  test->add_option("--level", o.level, "test size (default 0.05)");

  CLI::App* sim = app.add_subcommand("simulate", "draw a dataset from the simulation design");
  sim->add_option("--family", o.family, "cox, odds-rate:<c> or bent:<c>")->capture_default_str();
  sim->add_option("--n", o.n, "sample size")->capture_default_str();
  sim->add_option("--eta0", o.eta0, "change in the covariate effect above the threshold")->capture_default_str();
  add_common(sim, o);

  CLI::App* table = app.add_subcommand("reproduce-table1", "size and power study of the score tests");
  table->add_option("--n", o.n, "sample size")->capture_default_str();
  table->add_option("--reps", o.reps, "replicates per cell")->capture_default_str();
  table->add_option("--M", o.M, "bootstrap replicates per test")->capture_default_str();
  table->add_option("--level", o.level, "test size (default 0.05)");
  table->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  add_common(table, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  std::ostringstream buffer;
  try {
    int code = 0;
    if (fit->parsed()) {
      code = cmd_fit(o, true, buffer, err);
    } else if (ci->parsed()) {
      code = cmd_fit(o, false, buffer, err);
    } else if (test->parsed()) {
      code = cmd_test(o, buffer, err);
    } else if (sim->parsed()) {
      code = cmd_simulate(o, buffer);
    } else {
      code = cmd_table(o, buffer, err);
    }
    if (o.out.empty()) {
      out << buffer.str();
    } else {
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw UsageError("cannot write '" + o.out + "'");
      f << buffer.str();
    }
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace transcp
