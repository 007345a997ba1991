#include "transcp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transcp/error.hpp"
#include "transcp/parallel.hpp"

namespace transcp {

void FitConfig::check() const {
  if (!(tol_gamma > 0.0) || !(tol_A > 0.0)) throw DomainError("tolerances must be positive");
  if (max_newton < 1 || max_fixpoint < 1 || step_halvings < 0) throw DomainError("iteration caps must be positive");
  if (a && b && !(*a < *b)) throw DomainError("threshold range needs a < b");
  if (!(box > 0.0)) throw DomainError("parameter box must be positive");
}

Eigen::VectorXd FitConfig::lower_bounds(int dim) const {
  if (lower) {
    if (lower->size() != dim) throw DomainError("lower bound vector has the wrong dimension");
    return *lower;
  }
  return Eigen::VectorXd::Constant(dim, -box);
}

Eigen::VectorXd FitConfig::upper_bounds(int dim) const {
  if (upper) {
    if (upper->size() != dim) throw DomainError("upper bound vector has the wrong dimension");
    return *upper;
  }
  return Eigen::VectorXd::Constant(dim, box);
}

std::vector<double> initial_jumps(const Model& model, const Eigen::VectorXd& gamma, const GroupMask& up) {
  // Cox denominators are plain risk-set sums and ignore the jumps.
  const Model cox_view(model.dataset(), TransformFamily::cox(), std::vector<double>(model.grid().begin(), model.grid().end()));
  const Model weighted = cox_view.with_weights(std::vector<double>(model.weights().begin(), model.weights().end()));
  const std::vector<double> ones(static_cast<std::size_t>(model.grid_size()), 1.0);
  const Eigen::VectorXd denom = weighted.profile_denominators(gamma, up, ones);
  const Eigen::VectorXd mass = model.event_mass();
  std::vector<double> jumps(static_cast<std::size_t>(model.grid_size()), 0.0);
  for (int k = 0; k < model.grid_size(); ++k) {
    if (mass[k] > 0.0) {
      if (!(denom[k] > 0.0)) throw NumericError("nonpositive weight at grid time " + std::to_string(k));
      jumps[static_cast<std::size_t>(k)] = mass[k] / denom[k];
    }
  }
  return jumps;
}

std::vector<double> profile_jumps(const Model& model, const Eigen::VectorXd& gamma, const GroupMask& up,
                                  std::vector<double> jumps, const FitConfig& cfg, int* sweeps) {
  const int K = model.grid_size();
  if (static_cast<int>(jumps.size()) != K) jumps = initial_jumps(model, gamma, up);
  const Eigen::VectorXd mass = model.event_mass();
  double change = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= cfg.max_fixpoint; ++sweep) {
    const Eigen::VectorXd denom = model.profile_denominators(gamma, up, jumps);
    change = 0.0;
    for (int k = 0; k < K; ++k) {
      double next = 0.0;
      if (mass[k] > 0.0) {
        if (!(denom[k] > 0.0)) {
          throw NumericError("nonpositive weight P_n W at grid time " + std::to_string(model.grid()[static_cast<std::size_t>(k)]));
        }
        next = mass[k] / denom[k];
        change = std::max(change, std::abs(next - jumps[static_cast<std::size_t>(k)]) / next);
      }
      jumps[static_cast<std::size_t>(k)] = next;
    }
    // Cox denominators do not depend on A: one sweep is exact.
    if (change < cfg.tol_A || model.family().is_cox()) {
      if (sweeps != nullptr) *sweeps += sweep;
      return jumps;
    }
  }
  if (sweeps != nullptr) *sweeps += cfg.max_fixpoint;
  throw NonConvergenceError("profile_A: fixed-point iteration did not converge", cfg.max_fixpoint, change,
                            std::move(jumps));
}

namespace {

std::vector<int> free_coordinates(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  std::vector<int> idx;
  for (int j = 0; j < lo.size(); ++j) {
    if (lo[j] > hi[j]) throw DomainError("parameter box has lower > upper");
    if (lo[j] < hi[j]) idx.push_back(j);
  }
  return idx;
}

Eigen::VectorXd project(const Eigen::VectorXd& g, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return g.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components that push against an active bound removed.
double projected_norm(const Eigen::VectorXd& grad, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi, const std::vector<int>& free) {
  double norm = 0.0;
  for (int j : free) {
    const bool blocked = (g[j] <= lo[j] && grad[j] < 0.0) || (g[j] >= hi[j] && grad[j] > 0.0);
    if (!blocked) norm = std::max(norm, std::abs(grad[j]));
  }
  return norm;
}

Eigen::MatrixXd profile_information(const InfoBlocks& blocks, bool* ok) {
  *ok = true;
  if (blocks.ga.cols() == 0) return blocks.gg;
  if (blocks.aa_is_diagonal) {
    const Eigen::VectorXd d = blocks.aa.diagonal();
    Eigen::MatrixXd scaled = blocks.ga;
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (d[k] > 0.0) {
        scaled.col(k) /= d[k];
      } else {
        scaled.col(k).setZero();
      }
    }
    return blocks.gg - scaled * blocks.ga.transpose();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(blocks.aa);
  if (llt.info() != Eigen::Success) {
    *ok = false;
    return blocks.gg;
  }
  return blocks.gg - blocks.ga * llt.solve(blocks.ga.transpose());
}

}  // namespace

GammaFit maximize_gamma(const Model& model, const GroupMask& up, const Eigen::VectorXd& gamma_init,
                        std::vector<double> jumps_init, const FitConfig& cfg) {
  cfg.check();
  const int P = model.gamma_dim();
  if (gamma_init.size() != P) throw DomainError("initial gamma has the wrong dimension");
  const Eigen::VectorXd lo = cfg.lower_bounds(P);
  const Eigen::VectorXd hi = cfg.upper_bounds(P);
  const std::vector<int> free = free_coordinates(lo, hi);
  const int F = static_cast<int>(free.size());

  GammaFit fit;
  fit.gamma = project(gamma_init, lo, hi);
  if (fit.gamma != gamma_init) fit.warnings.emplace_back("initial gamma projected onto the parameter box");
  fit.jumps = profile_jumps(model, fit.gamma, up, std::move(jumps_init), cfg, &fit.fixpoint_sweeps);
  fit.profile_loglik = model.loglik(fit.gamma, up, fit.jumps);
  fit.loglik_trace.push_back(fit.profile_loglik);

  bool warned_singular = false;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd grad = model.score(fit.gamma, up, fit.jumps);
    fit.gradient_norm = projected_norm(grad, fit.gamma, lo, hi, free);
    if (fit.gradient_norm < cfg.tol_gamma || F == 0) break;
    if (it >= cfg.max_newton) {
      throw NonConvergenceError("maximize_gamma: Newton iteration cap reached (gradient " +
                                    std::to_string(fit.gradient_norm) + ")",
                                it, fit.gradient_norm);
    }

    Eigen::VectorXd gF(F);
    for (int a = 0; a < F; ++a) gF[a] = grad[free[static_cast<std::size_t>(a)]];

    const InfoBlocks blocks = model.info_blocks(fit.gamma, up, fit.jumps);
    bool schur_ok = true;
    const Eigen::MatrixXd info = profile_information(blocks, &schur_ok);
    auto restrict = [&](const Eigen::MatrixXd& m) {
      Eigen::MatrixXd r(F, F);
      for (int a = 0; a < F; ++a) {
        for (int b = 0; b < F; ++b) r(a, b) = m(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
      return r;
    };
    // Candidate directions, tried in order until one yields ascent: the
    // profile Newton step, a Newton step on the eigenvalue-modified
    // (absolute-value) Hessian, and a short gradient step.
    std::vector<Eigen::VectorXd> dirs;
    const Eigen::MatrixXd infoF = restrict(info);
    Eigen::LLT<Eigen::MatrixXd> llt(infoF);
    // When the predicted Newton gain is below what the log-likelihood can
    // resolve, the full Newton step is accepted up to rounding.
    double slack = 0.0;
    if (schur_ok && llt.info() == Eigen::Success) {
      dirs.push_back(llt.solve(gF));
      const double gain = 0.5 * gF.dot(dirs.back());
      const double resolution = 1e-13 * (1.0 + std::abs(fit.profile_loglik));
      if (gain >= 0.0 && gain < resolution) slack = resolution;
    }
    {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(schur_ok ? infoF : restrict(blocks.gg));
      if (es.info() == Eigen::Success) {
        const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
        const double top = ev.maxCoeff();
        if (top > 0.0 && std::isfinite(top)) {
          const Eigen::VectorXd inv = ev.cwiseMax(1e-8 * top).cwiseInverse();
          dirs.push_back(es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * gF));
        }
      }
    }
    dirs.push_back(1e-2 * gF);

    bool accepted = false;
    for (std::size_t c = 0; c < dirs.size() && !accepted; ++c) {
      if (!(dirs[c].dot(gF) > 0.0)) continue;
      if (c + 1 == dirs.size() && !warned_singular) {
        fit.warnings.emplace_back("information singular or indefinite; taking gradient-ascent steps");
        warned_singular = true;
      }
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(P);
      for (int a = 0; a < F; ++a) dir[free[static_cast<std::size_t>(a)]] = dirs[c][a];
      double step = 1.0;
      for (int h = 0; h <= cfg.step_halvings; ++h, step *= 0.5) {
        Eigen::VectorXd cand = fit.gamma + step * dir;
        const Eigen::VectorXd projected = project(cand, lo, hi);
        const bool clipped = projected != cand;
        std::vector<double> cand_jumps;
        try {
          cand_jumps = profile_jumps(model, projected, up, fit.jumps, cfg, &fit.fixpoint_sweeps);
        } catch (const NonConvergenceError&) {
          continue;
        } catch (const NumericError&) {
          continue;
        } catch (const DomainError&) {
          continue;
        }
        double cand_ll = -std::numeric_limits<double>::infinity();
        try {
          cand_ll = model.loglik(projected, up, cand_jumps);
        } catch (const std::exception&) {
          continue;
        }
        if (cand_ll >= fit.profile_loglik - (c == 0 && h == 0 ? slack : 0.0)) {
          if (clipped && !fit.hit_box) {
            fit.hit_box = true;
            fit.warnings.emplace_back("gamma reached the parameter box");
          }
          fit.gamma = projected;
          fit.jumps = std::move(cand_jumps);
          fit.profile_loglik = cand_ll;
          fit.loglik_trace.push_back(cand_ll);
          accepted = true;
          break;
        }
      }
    }
    ++fit.newton_iterations;
    if (!accepted) {
      // No ascent possible within floating-point resolution.
      if (fit.gradient_norm < 1e3 * cfg.tol_gamma) break;
      throw NonConvergenceError("maximize_gamma: line search failed (gradient " +
                                    std::to_string(fit.gradient_norm) + ")",
                                it, fit.gradient_norm);
    }
  }
  return fit;
}

NullFit fit_null(const Model& model, const FitConfig& cfg, const std::optional<NullFit>& warm) {
  const int P = model.gamma_dim();
  const int q = model.dataset().q;
  FitConfig c = cfg;
  Eigen::VectorXd lo = cfg.lower_bounds(P);
  Eigen::VectorXd hi = cfg.upper_bounds(P);
  lo.head(1 + q).setZero();
  hi.head(1 + q).setZero();
  c.lower = lo;
  c.upper = hi;
  const GroupMask up = all_groups(model.dataset(), 0);
  Eigen::VectorXd g0 = Eigen::VectorXd::Zero(P);
  std::vector<double> j0;
  if (warm) {
    g0 = warm->psi.gamma();
    j0 = warm->psi.A.jumps;
  }
  NullFit out;
  out.details = maximize_gamma(model, up, g0, std::move(j0), c);
  out.psi = RegularParams::zeros(q, model.dataset().d());
  out.psi.set_gamma(out.details.gamma);
  out.psi.A.times.assign(model.grid().begin(), model.grid().end());
  out.psi.A.jumps = out.details.jumps;
  out.loglik = out.details.profile_loglik;
  return out;
}

CumHazard profile_A(const TransformFamily& fam, const Theta& xi, const Dataset& ds, const CumHazard& init,
                    const FitConfig& cfg) {
  const auto grid = event_grid(ds);
  const Model model(ds, fam, grid);
  std::vector<double> j0;
  if (!init.times.empty()) {
    if (init.times != grid) throw DomainError("initial cumulative hazard must live on the event grid");
    j0 = init.jumps;
  }
  CumHazard out;
  out.times = grid;
  out.jumps = profile_jumps(model, xi.psi.gamma(), groups_above(ds, xi.zeta), std::move(j0), cfg);
  return out;
}

GammaFit maximize_gamma(const TransformFamily& fam, double zeta, const Dataset& ds, const RegularParams& init,
                        const FitConfig& cfg) {
  const auto grid = event_grid(ds);
  const Model model(ds, fam, grid);
  std::vector<double> j0;
  if (!init.A.times.empty()) {
    if (init.A.times != grid) throw DomainError("initial cumulative hazard must live on the event grid");
    j0 = init.A.jumps;
  }
  return maximize_gamma(model, groups_above(ds, zeta), init.gamma(), std::move(j0), cfg);
}

std::vector<double> threshold_grid(const Dataset& ds, double a, double b) {
  std::vector<double> ys;
  for (const auto& s : ds.subjects) {
    if (s.y >= a && s.y <= b) ys.push_back(s.y);
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  return ys;
}

std::pair<double, double> resolve_range(const Dataset& ds, const FitConfig& cfg) {
  auto [a, b] = default_threshold_range(ds);
  if (cfg.a) a = *cfg.a;
  if (cfg.b) b = *cfg.b;
  if (!(a < b)) throw DomainError("threshold range needs a < b");
  return {a, b};
}

FitResult fit_npmle(const Dataset& ds, const TransformFamily& fam, const FitConfig& cfg) {
  cfg.check();
  const auto [a, b] = resolve_range(ds, cfg);
  const auto zetas = threshold_grid(ds, a, b);
  if (zetas.empty()) throw DomainError("no Y values inside the threshold range");
  const Model model(ds, fam, event_grid(ds));
  const int P = model.gamma_dim();

  struct Slot {
    bool usable = false;
    bool ok = false;
    GammaFit fit;
    std::string failure;
  };
  std::vector<Slot> slots(zetas.size());
  auto fit_at = [&](std::size_t g, const Eigen::VectorXd& g0, std::vector<double> j0) {
    Slot& slot = slots[g];
    const GroupMask up = groups_above(ds, zetas[g]);
    const auto above = std::count(up.begin(), up.end(), 1);
    if (above == 0 || above == static_cast<long>(ds.n())) return;
    slot.usable = true;
    try {
      slot.fit = maximize_gamma(model, up, g0, std::move(j0), cfg);
      slot.ok = true;
    } catch (const NonConvergenceError& e) {
      slot.failure = e.what();
    } catch (const NumericError& e) {
      slot.failure = e.what();
    } catch (const DomainError& e) {
      slot.failure = e.what();
    }
  };

  if (cfg.warm_start) {
    Eigen::VectorXd g0 = Eigen::VectorXd::Zero(P);
    std::vector<double> j0;
    for (std::size_t g = 0; g < zetas.size(); ++g) {
      fit_at(g, g0, j0);
      if (slots[g].ok) {
        g0 = slots[g].fit.gamma;
        j0 = slots[g].fit.jumps;
      }
    }
  } else {
    parallel_for(zetas.size(), cfg.threads,
                 [&](std::size_t g) { fit_at(g, Eigen::VectorXd::Zero(P), {}); });
  }

  FitResult res;
  res.a = a;
  res.b = b;
  std::size_t best = zetas.size();
  for (std::size_t g = 0; g < zetas.size(); ++g) {
    const Slot& slot = slots[g];
    if (!slot.usable) {
      res.warnings.push_back("zeta = " + std::to_string(zetas[g]) + " skipped: one group is empty");
      continue;
    }
    if (!slot.ok) {
      ++res.grid_failures;
      res.warnings.push_back("zeta = " + std::to_string(zetas[g]) + ": " + slot.failure);
      continue;
    }
    res.profile_curve.emplace_back(zetas[g], slot.fit.profile_loglik);
    res.newton_iterations += slot.fit.newton_iterations;
    res.fixpoint_sweeps += slot.fit.fixpoint_sweeps;
    if (best == zetas.size() || slot.fit.profile_loglik > slots[best].fit.profile_loglik) best = g;
  }
  if (best == zetas.size()) throw NonConvergenceError("fit_npmle: no grid point produced a converged fit", 0, 0.0);

  const GammaFit& top = slots[best].fit;
  res.theta_hat.zeta = zetas[best];
  res.theta_hat.psi = RegularParams::zeros(ds.q, ds.d());
  res.theta_hat.psi.set_gamma(top.gamma);
  res.theta_hat.psi.A.times.assign(model.grid().begin(), model.grid().end());
  res.theta_hat.psi.A.jumps = top.jumps;
  res.loglik = top.profile_loglik;
  res.gradient_norm = top.gradient_norm;
  res.converged = true;
  for (const auto& w : top.warnings) res.warnings.push_back("at zeta-hat: " + w);
  return res;
}

NullFit fit_null(const Dataset& ds, const TransformFamily& fam, const FitConfig& cfg) {
  const Model model(ds, fam, event_grid(ds));
  return fit_null(model, cfg);
}

}  // namespace transcp
