#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/families.hpp"
#include "transcp/inference.hpp"
#include "transcp/random.hpp"

namespace transcp {

// Data-generating design: Z ~ N(0, I_d), Y ~ N(0, 1) independent,
// A0(t) = t, censoring min(Exp(censor_rate), censor_cap), tau = censor_cap.
struct Scenario {
  TransformFamily family = TransformFamily::cox();
  int n = 300;
  double zeta0 = 0.0;
  double alpha0 = 0.0;
  Eigen::VectorXd beta0 = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd eta0 = Eigen::VectorXd::Zero(1);  // last q components of Z interact
  double censor_rate = 0.1;
  double censor_cap = 10.0;
  double inner_frac = 0.8;

  void check() const;

  // zeta0 = 0, alpha0 = 0, beta0 = 1, d = q = 1.
  static Scenario table1(const TransformFamily& fam, double eta0, int n = 300);
};

// T solving Lambda(e^r T) = u.
double event_time(const TransformFamily& fam, double u, double r);

Dataset simulate_dataset(const Scenario& scn, Rng& rng);

struct StatSummary {
  double mean = 0.0;
  double sd = 0.0;
  double power = 0.0;
  double mean_se = 0.0;   // Monte Carlo standard errors
  double power_se = 0.0;
};

struct ScenarioSummary {
  Scenario scenario;
  int reps = 0;
  int failures = 0;
  int M = 0;
  double level = 0.05;
  StatSummary sup;
  StatSummary mean;
  std::vector<double> t_sup;   // per successful replicate
  std::vector<double> t_int;
  std::vector<char> reject_sup;
  std::vector<char> reject_int;
};

// reps replicates of simulate + run_test; replicate r uses stream r of the
// master seed for its data and stream r of a derived seed for its bootstrap.
ScenarioSummary run_scenario(const Scenario& scn, int reps, int M, double level, std::uint64_t master_seed,
                             const WeightScheme& scheme = WeightScheme::exp_truncated(), int threads = 1);

struct Table1Config {
  int n = 300;
  int reps = 250;
  int M = 250;
  double level = 0.05;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<double> eta0 = {0.0, -0.5, -1.0, -2.0, -3.0};
  std::vector<TransformFamily> families = {TransformFamily::cox(), TransformFamily::odds_rate(1.0)};
};

struct Table1 {
  Table1Config config;
  std::vector<ScenarioSummary> cells;  // family-major, eta0-minor
};

Table1 reproduce_table1(const Table1Config& cfg, std::ostream* progress = nullptr);

// Long-format CSV: family,eta0,test,mean,sd,power,mean_se,power_se,reps,failures.
void write_table1_csv(const Table1& table, std::ostream& out);
std::string table1_json(const Table1& table);

}  // namespace transcp
