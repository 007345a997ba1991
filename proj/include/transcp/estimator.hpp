#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/families.hpp"
#include "transcp/model.hpp"
#include "transcp/params.hpp"

namespace transcp {

struct FitConfig {
  double tol_gamma = 1e-8;   // sup-norm of the free gradient
  double tol_A = 1e-10;      // largest relative jump change in one fixed-point sweep
  int max_newton = 50;
  int max_fixpoint = 200;
  int step_halvings = 30;
  std::optional<double> a;   // threshold range; default inner 80% of Y
  std::optional<double> b;
  double box = 50.0;         // default box (-box, box) for every gamma coordinate
  std::optional<Eigen::VectorXd> lower;  // per-coordinate overrides, gamma order
  std::optional<Eigen::VectorXd> upper;
  bool warm_start = true;
  int threads = 1;           // used by cold-started grid sweeps only

  void check() const;
  Eigen::VectorXd lower_bounds(int dim) const;
  Eigen::VectorXd upper_bounds(int dim) const;
};

struct GammaFit {
  Eigen::VectorXd gamma;
  std::vector<double> jumps;
  double profile_loglik = 0.0;
  double gradient_norm = 0.0;
  int newton_iterations = 0;
  int fixpoint_sweeps = 0;
  bool hit_box = false;
  std::vector<double> loglik_trace;  // profile log-likelihood after each accepted step
  std::vector<std::string> warnings;
};

struct FitResult {
  Theta theta_hat;
  double loglik = 0.0;
  std::vector<std::pair<double, double>> profile_curve;  // (zeta, pL_n(zeta))
  double gradient_norm = 0.0;
  int newton_iterations = 0;   // summed over the grid
  int fixpoint_sweeps = 0;
  int grid_failures = 0;
  bool converged = false;
  double a = 0.0;
  double b = 0.0;
  std::vector<std::string> warnings;
};

struct NullFit {
  RegularParams psi;   // alpha = 0, eta = 0
  double loglik = 0.0;
  GammaFit details;
};

// --- Model-level routines (used by the bootstraps with weighted models) ---

// Breslow-type start: the self-consistency sweep with Xi0 replaced by 1.
std::vector<double> initial_jumps(const Model& model, const Eigen::VectorXd& gamma, const GroupMask& up);

// Fixed point of dA_k = (weighted events at t_k) / (n P_n W(t_k; theta)).
std::vector<double> profile_jumps(const Model& model, const Eigen::VectorXd& gamma, const GroupMask& up,
                                  std::vector<double> jumps, const FitConfig& cfg, int* sweeps = nullptr);

// Alternating maximization of gamma -> sup_A loglik at a fixed group assignment.
// Coordinates whose box collapses (lower == upper) stay fixed.
GammaFit maximize_gamma(const Model& model, const GroupMask& up, const Eigen::VectorXd& gamma_init,
                        std::vector<double> jumps_init, const FitConfig& cfg);

NullFit fit_null(const Model& model, const FitConfig& cfg, const std::optional<NullFit>& warm = std::nullopt);

// --- Dataset-level entry points ---

CumHazard profile_A(const TransformFamily& fam, const Theta& xi, const Dataset& ds, const CumHazard& init,
                    const FitConfig& cfg = {});

GammaFit maximize_gamma(const TransformFamily& fam, double zeta, const Dataset& ds, const RegularParams& init,
                        const FitConfig& cfg = {});

// Profile-likelihood NPMLE: pL_n(zeta) on every distinct Y in [a, b], argmax
// with ties resolved to the smallest zeta.
FitResult fit_npmle(const Dataset& ds, const TransformFamily& fam, const FitConfig& cfg = {});

NullFit fit_null(const Dataset& ds, const TransformFamily& fam, const FitConfig& cfg = {});

// Distinct Y values in [a, b], ascending.
std::vector<double> threshold_grid(const Dataset& ds, double a, double b);

// Resolves cfg.a / cfg.b against the data (inner 80% of Y by default).
std::pair<double, double> resolve_range(const Dataset& ds, const FitConfig& cfg);

}  // namespace transcp
