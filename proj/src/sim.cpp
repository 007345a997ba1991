#include "transcp/sim.hpp"

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "transcp/error.hpp"
#include "transcp/parallel.hpp"
#include "transcp/scoretest.hpp"

namespace transcp {

void Scenario::check() const {
  if (n < 10) throw DomainError("scenario needs n >= 10");
  if (eta0.size() < 1 || beta0.size() < eta0.size()) throw DomainError("scenario needs 1 <= q <= d");
  if (!(censor_rate > 0.0) || !(censor_cap > 0.0)) throw DomainError("censoring rate and cap must be positive");
  if (!(inner_frac > 0.0 && inner_frac < 1.0)) throw DomainError("inner_frac must lie in (0, 1)");
}

Scenario Scenario::table1(const TransformFamily& fam, double eta0, int n) {
  Scenario s;
  s.family = fam;
  s.n = n;
  s.eta0 = Eigen::VectorXd::Constant(1, eta0);
  return s;
}

double event_time(const TransformFamily& fam, double u, double r) { return lambda_inv(fam, u) * std::exp(-r); }

Dataset simulate_dataset(const Scenario& scn, Rng& rng) {
  scn.check();
  const int d = static_cast<int>(scn.beta0.size());
  const int q = static_cast<int>(scn.eta0.size());
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::exponential_distribution<double> censor(scn.censor_rate);
  Dataset ds;
  ds.p = d - q;
  ds.q = q;
  ds.tau = scn.censor_cap;
  ds.subjects.reserve(static_cast<std::size_t>(scn.n));
  for (int i = 0; i < scn.n; ++i) {
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z[j] = normal(rng);
    const double y = normal(rng);
    double u = 0.0;
    while (u == 0.0) u = unif(rng);
    double r = scn.beta0.dot(z);
    if (y > scn.zeta0) r += scn.alpha0 + scn.eta0.dot(z.tail(q));
    const double t = event_time(scn.family, u, r);
    const double c = std::min(censor(rng), scn.censor_cap);
    Subject s;
    s.id = std::to_string(i + 1);
    s.v = std::min(t, c);
    s.delta = t <= c ? 1 : 0;
    s.y = y;
    s.z = CovariatePath(std::move(z));
    ds.subjects.push_back(std::move(s));
  }
  return ds;
}

namespace {

StatSummary summarize(const std::vector<double>& stats, const std::vector<char>& rejects) {
  StatSummary out;
  const double m = static_cast<double>(stats.size());
  if (stats.empty()) return out;
  for (double t : stats) out.mean += t;
  out.mean /= m;
  double ss = 0.0;
  for (double t : stats) ss += (t - out.mean) * (t - out.mean);
  out.sd = stats.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  for (char r : rejects) out.power += r ? 1.0 : 0.0;
  out.power /= m;
  out.mean_se = out.sd / std::sqrt(m);
  out.power_se = std::sqrt(out.power * (1.0 - out.power) / m);
  return out;
}

}  // namespace

ScenarioSummary run_scenario(const Scenario& scn, int reps, int M, double level, std::uint64_t master_seed,
                             const WeightScheme& scheme, int threads) {
  scn.check();
  if (reps < 2) throw DomainError("run_scenario needs reps >= 2");
  struct Slot {
    bool ok = false;
    double t_sup = 0.0;
    double t_int = 0.0;
    char reject_sup = 0;
    char reject_int = 0;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(reps));
  parallel_for(slots.size(), threads, [&](std::size_t r) {
    Rng rng = stream_rng(master_seed, r);
    const Dataset ds = simulate_dataset(scn, rng);
    const std::uint64_t boot_seed = stream_rng(master_seed ^ 0xB0075EEDULL, r)();
    try {
      const auto [a, b] = default_threshold_range(ds, scn.inner_frac);
      const TestResult res = run_test(ds, scn.family, a, b, M, scheme, level, boot_seed);
      slots[r] = {true, res.t_sup, res.t_int, static_cast<char>(res.reject_sup), static_cast<char>(res.reject_int)};
    } catch (const NonConvergenceError&) {
    } catch (const NumericError&) {
    } catch (const DomainError&) {
    }
  });

  ScenarioSummary out;
  out.scenario = scn;
  out.reps = reps;
  out.M = M;
  out.level = level;
  for (const auto& s : slots) {
    if (!s.ok) {
      ++out.failures;
      continue;
    }
    out.t_sup.push_back(s.t_sup);
    out.t_int.push_back(s.t_int);
    out.reject_sup.push_back(s.reject_sup);
    out.reject_int.push_back(s.reject_int);
  }
  if (out.failures > 0.05 * reps) {
    throw NonConvergenceError("run_scenario: " + std::to_string(out.failures) + " of " + std::to_string(reps) +
                                  " replicates failed",
                              out.failures, 0.0);
  }
  out.sup = summarize(out.t_sup, out.reject_sup);
  out.mean = summarize(out.t_int, out.reject_int);
  return out;
}

Table1 reproduce_table1(const Table1Config& cfg, std::ostream* progress) {
  if (cfg.families.empty() || cfg.eta0.empty()) throw DomainError("table needs at least one family and one eta0");
  Table1 table;
  table.config = cfg;
  std::size_t cell = 0;
  for (const auto& fam : cfg.families) {
    for (double eta : cfg.eta0) {
      const Scenario scn = Scenario::table1(fam, eta, cfg.n);
      const std::uint64_t seed = stream_rng(cfg.seed, cell++)();
      table.cells.push_back(run_scenario(scn, cfg.reps, cfg.M, cfg.level, seed, WeightScheme::exp_truncated(),
                                         cfg.threads));
      if (progress) {
        const auto& c = table.cells.back();
        *progress << fam.to_string() << " eta0=" << eta << ": sup mean " << c.sup.mean << " power " << c.sup.power
                  << ", mean-test mean " << c.mean.mean << " power " << c.mean.power << "\n";
      }
    }
  }
  return table;
}

void write_table1_csv(const Table1& table, std::ostream& out) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "family,eta0,test,mean,sd,power,mean_se,power_se,reps,failures\n";
  for (const auto& c : table.cells) {
    for (int t = 0; t < 2; ++t) {
      const StatSummary& s = t == 0 ? c.sup : c.mean;
      os << c.scenario.family.to_string() << ',' << c.scenario.eta0[0] << ',' << (t == 0 ? "sup" : "mean") << ','
         << s.mean << ',' << s.sd << ',' << s.power << ',' << s.mean_se << ',' << s.power_se << ',' << c.reps << ','
         << c.failures << '\n';
    }
  }
  out << os.str();
}

std::string table1_json(const Table1& table) {
  using nlohmann::ordered_json;
  auto stat = [](const StatSummary& s) {
    return ordered_json{{"mean", s.mean},       {"sd", s.sd},           {"power", s.power},
                        {"mean_se", s.mean_se}, {"power_se", s.power_se}};
  };
  ordered_json cells = ordered_json::array();
  for (const auto& c : table.cells) {
    cells.push_back(ordered_json{{"family", c.scenario.family.to_string()},
                                 {"eta0", c.scenario.eta0[0]},
                                 {"reps", c.reps},
                                 {"failures", c.failures},
                                 {"sup", stat(c.sup)},
                                 {"mean", stat(c.mean)}});
  }
  const auto& cfg = table.config;
  ordered_json j{{"config",
                  {{"n", cfg.n}, {"reps", cfg.reps}, {"M", cfg.M}, {"level", cfg.level}, {"seed", cfg.seed}}},
                 {"cells", cells}};
  return j.dump(2);
}

}  // namespace transcp
