#pragma once

#include <Eigen/Dense>
#include <vector>

namespace transcp {

// Baseline cumulative hazard: a nonnegative jump function on ascending times.
struct CumHazard {
  std::vector<double> times;
  std::vector<double> jumps;

  // A(t) = sum of jumps at times <= t.
  double at(double t) const;
  std::size_t size() const { return times.size(); }

  friend bool operator==(const CumHazard&, const CumHazard&) = default;
};

// psi = (alpha, eta, beta, A). eta has q entries, beta has d = p + q entries.
struct RegularParams {
  double alpha = 0.0;
  Eigen::VectorXd eta;
  Eigen::VectorXd beta;
  CumHazard A;

  // gamma = (alpha, eta_1..eta_q, beta_1..beta_d)
  Eigen::VectorXd gamma() const;
  void set_gamma(const Eigen::Ref<const Eigen::VectorXd>& g);
  int gamma_dim() const { return 1 + static_cast<int>(eta.size() + beta.size()); }

  static RegularParams zeros(int q, int d);
};

struct Theta {
  RegularParams psi;
  double zeta = 0.0;
};

}  // namespace transcp
