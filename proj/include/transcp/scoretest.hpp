#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/estimator.hpp"
#include "transcp/families.hpp"
#include "transcp/inference.hpp"
#include "transcp/model.hpp"
#include "transcp/params.hpp"

namespace transcp {

// zeta -> S1(zeta), the (alpha, eta) score at the null fit scaled by sqrt(n).
// values[k] holds on [grid[k], grid[k+1]).
struct ScoreProcess {
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> values;
};

// Distinct Y values in [a, b], with a prepended when it is not itself a Y value.
std::vector<double> score_grid(const Dataset& ds, double a, double b);

ScoreProcess score_process(const TransformFamily& fam, const RegularParams& psi0, const Dataset& ds,
                           std::span<const double> grid);

// Weighted version: the model's subject weights multiply every contribution.
ScoreProcess score_process(const Model& model, const RegularParams& psi0, std::span<const double> grid);

struct BootstrapProcesses {
  std::vector<ScoreProcess> processes;
  int dropped = 0;
  std::vector<std::string> warnings;
};

// Replicate m draws weights from stream_rng(seed, m), refits the null with
// them and evaluates the weighted process with the same weights. Returned
// replicates are S1 + (mu_kappa / sigma_kappa) (S1_raw - S1).
BootstrapProcesses bootstrap_score_processes(const Dataset& ds, const TransformFamily& fam,
                                             std::span<const double> grid, int M, const WeightScheme& scheme,
                                             std::uint64_t seed, const FitConfig& cfg = {});

// Covariance (divisor M) of the replicates at each grid point.
std::vector<Eigen::MatrixXd> vhat(const std::vector<ScoreProcess>& processes);

struct Statistics {
  double t_sup = 0.0;
  double t_int = 0.0;
  double vhat_condition = 1.0;  // worst condition number before ridging
  int excluded = 0;             // grid points with V = 0
  std::vector<double> quadratic;  // S' V^-1 S per grid point (0 where excluded)
  std::vector<std::string> warnings;
};

Statistics test_statistics(const ScoreProcess& S, const std::vector<Eigen::MatrixXd>& V, double a, double b);

struct TestResult {
  double t_sup = 0.0;
  double t_int = 0.0;
  double crit_sup = 0.0;
  double crit_int = 0.0;
  double p_sup = 1.0;
  double p_int = 1.0;
  bool reject_sup = false;
  bool reject_int = false;
  double level = 0.05;
  double vhat_condition = 1.0;
  int M = 0;          // replicates used
  int dropped = 0;    // replicates lost to nonconvergence
  int excluded = 0;   // grid points with V = 0
  double a = 0.0;
  double b = 0.0;
  NullFit null_fit;
  ScoreProcess observed;
  std::vector<Eigen::MatrixXd> V;
  std::vector<double> boot_sup;
  std::vector<double> boot_int;
  std::vector<std::string> warnings;
};

TestResult run_test(const Dataset& ds, const TransformFamily& fam, double a, double b, int M,
                    const WeightScheme& scheme, double level, std::uint64_t seed, const FitConfig& cfg = {});

// Plug-in Sigma*(zeta1, zeta2) from the empirical information blocks at the
// null fit.
Eigen::MatrixXd plugin_covariance(const TransformFamily& fam, const RegularParams& psi0, const Dataset& ds,
                                  double zeta1, double zeta2);

}  // namespace transcp
