#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/estimator.hpp"
#include "transcp/families.hpp"
#include "transcp/random.hpp"

namespace transcp {

// Law of the raw bootstrap multipliers kappa.
class WeightScheme {
 public:
  enum class Kind { ExpTruncated, Exponential };

  // Standard exponential conditioned on kappa <= cap.
  static WeightScheme exp_truncated(double cap = 5.0);
  static WeightScheme exponential();

  Kind kind() const noexcept { return kind_; }
  double cap() const noexcept { return cap_; }
  double mu_kappa() const noexcept { return mu_; }
  double sigma_kappa() const noexcept { return sigma_; }

  double draw(Rng& rng) const;

 private:
  WeightScheme(Kind kind, double cap, double mu, double sigma) : kind_(kind), cap_(cap), mu_(mu), sigma_(sigma) {}

  Kind kind_;
  double cap_;
  double mu_;
  double sigma_;
};

// n i.i.d. draws divided by their sample mean (they sum to n).
std::vector<double> draw_weights(std::size_t n, const WeightScheme& scheme, Rng& rng);

struct PsiBootstrap {
  double level = 0.95;
  std::vector<std::string> names;  // alpha, eta1.., beta1..
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  // pointwise band for A on the event grid
  std::vector<double> A_times;
  std::vector<double> A_estimate;
  std::vector<double> A_se;
  std::vector<double> A_lower;
  std::vector<double> A_upper;
  int replicates = 0;   // successful
  int failures = 0;
  Eigen::MatrixXd gamma_draws;  // successful replicates x P
  std::vector<std::string> warnings;
};

// Weighted bootstrap of (alpha, eta, beta, A) at fixed zeta = zeta-hat.
// Replicate b uses stream_rng(seed, b).
PsiBootstrap bootstrap_psi(const Dataset& ds, const TransformFamily& fam, const FitResult& fit, int B,
                           const WeightScheme& scheme, std::uint64_t seed, double level = 0.95,
                           const FitConfig& cfg = {});

// Same with caller-supplied weight vectors; the spread of the replicates is
// multiplied by se_scale (mu_kappa / sigma_kappa).
PsiBootstrap bootstrap_psi_weights(const Dataset& ds, const TransformFamily& fam, const FitResult& fit,
                                   const std::vector<std::vector<double>>& weights, double se_scale,
                                   double level = 0.95, const FitConfig& cfg = {});

// Gaussian kernel density estimate, Silverman bandwidth.
double kde_at(std::span<const double> ys, double point);

struct JumpSamples {
  std::vector<double> vplus;
  std::vector<double> vminus;
  int c1 = 0;
  int c2 = 0;
  int m_tilde = 0;
  int l_tilde = 0;  // 1-based order index of zeta-hat among the Y values
};

// l_1 - l_2 log-likelihood differences of the observations flanking zeta-hat.
JumpSamples build_jump_samples(const Dataset& ds, const TransformFamily& fam, const Theta& theta);

// Realization of Q = Q+ 1{u > 0} - Q- 1{u < 0}: jump locations with the
// value Q takes on the segment starting there and running away from 0
// ([t, next) on the right, (next, t] on the left). Sorted by location.
struct JumpPath {
  std::vector<double> at;
  std::vector<double> value;
};

JumpPath simulate_jump_path(double h_hat, std::span<const double> fplus, std::span<const double> fminus,
                            double lower, double upper, Rng& rng);

// Smallest-|v| point of the maximizing segments; Q(0) = 0 is a candidate.
double minimal_argmax(const JumpPath& path);

// Minimal-|v| maximizer of the two-sided compound Poisson process with
// Exponential(h_hat) spacings and jump heights resampled from fplus / fminus.
double simulate_vstar(double h_hat, std::span<const double> fplus, std::span<const double> fminus, double lower,
                      double upper, Rng& rng);

struct ChangePointCI {
  double level = 0.95;
  double zeta_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int vstar_draws = 0;
  double h_hat = 0.0;
  double q_low = 0.0;   // quantiles of v*, n-scale
  double q_high = 0.0;
  int c1 = 0;
  int c2 = 0;
};

// [zeta - q_high / n, zeta - q_low / n] intersected with [a, b], from v* draws.
ChangePointCI interval_from_draws(double zeta, double n, double a, double b, double level,
                                  std::span<const double> draws);

ChangePointCI cp_confidence_interval(const Dataset& ds, const TransformFamily& fam, const FitResult& fit,
                                     double level, int B, std::uint64_t seed, int threads = 1);

}  // namespace transcp
