#include "transcp/scoretest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "transcp/error.hpp"
#include "transcp/parallel.hpp"
#include "transcp/random.hpp"
#include "transcp/stats.hpp"

namespace transcp {

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("score process grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw DomainError("score process grid must be strictly increasing");
  }
}

void check_range(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) throw DomainError("need finite a < b");
}

}  // namespace

std::vector<double> score_grid(const Dataset& ds, double a, double b) {
  check_range(a, b);
  std::vector<double> grid = threshold_grid(ds, a, b);
  if (grid.empty() || grid.front() != a) grid.insert(grid.begin(), a);
  return grid;
}

ScoreProcess score_process(const Model& model, const RegularParams& psi0, std::span<const double> grid) {
  check_grid(grid);
  if (psi0.alpha != 0.0 || psi0.eta.cwiseAbs().sum() != 0.0) {
    throw DomainError("score process needs a null parameter (alpha = 0, eta = 0)");
  }
  const Dataset& ds = model.dataset();
  const int n = model.n();
  const int q = ds.q;
  const int P = model.gamma_dim();
  if (psi0.gamma_dim() != P) throw DomainError("null parameter dimension does not match the data");
  // At the null the linear predictor ignores the group, so with everyone
  // "up" the first 1 + q columns are the (alpha, eta) contributions.
  const Eigen::MatrixXd u = model.score_contributions(psi0.gamma(), all_groups(ds, 1), psi0.A.jumps);
  const auto w = model.weights();

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return ds.subjects[static_cast<std::size_t>(i)].y < ds.subjects[static_cast<std::size_t>(j)].y;
  });

  ScoreProcess out;
  out.grid.assign(grid.begin(), grid.end());
  out.values.assign(grid.size(), Eigen::VectorXd::Zero(1 + q));
  // Walk the grid from the top, adding subjects with Y > zeta.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(1 + q);
  int pos = n - 1;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = grid.size(); k-- > 0;) {
    while (pos >= 0 && ds.subjects[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])].y > grid[k]) {
      const int i = order[static_cast<std::size_t>(pos)];
      acc += w[static_cast<std::size_t>(i)] * u.row(i).head(1 + q).transpose();
      --pos;
    }
    out.values[k] = scale * acc;
  }
  return out;
}

ScoreProcess score_process(const TransformFamily& fam, const RegularParams& psi0, const Dataset& ds,
                           std::span<const double> grid) {
  const Model model(ds, fam, psi0.A.times);
  return score_process(model, psi0, grid);
}

namespace {

BootstrapProcesses bootstrap_from_null(const Model& model, const NullFit& null, const ScoreProcess& observed,
                                       int M, const WeightScheme& scheme, std::uint64_t seed,
                                       const FitConfig& cfg) {
  if (M < 2) throw DomainError("need M >= 2 bootstrap replicates");
  const std::size_t n = model.dataset().n();
  const double ratio = scheme.mu_kappa() / scheme.sigma_kappa();
  std::vector<ScoreProcess> draws(static_cast<std::size_t>(M));
  std::vector<char> ok(static_cast<std::size_t>(M), 0);
  parallel_for(static_cast<std::size_t>(M), cfg.threads, [&](std::size_t m) {
    Rng rng = stream_rng(seed, m);
    const Model wm = model.with_weights(draw_weights(n, scheme, rng));
    try {
      const NullFit nf = fit_null(wm, cfg, null);
      ScoreProcess s = score_process(wm, nf.psi, observed.grid);
      for (std::size_t k = 0; k < s.values.size(); ++k) {
        s.values[k] = observed.values[k] + ratio * (s.values[k] - observed.values[k]);
      }
      draws[m] = std::move(s);
      ok[m] = 1;
    } catch (const NonConvergenceError&) {
    } catch (const NumericError&) {
    } catch (const DomainError&) {
    }
  });
  BootstrapProcesses out;
  for (std::size_t m = 0; m < draws.size(); ++m) {
    if (ok[m]) out.processes.push_back(std::move(draws[m]));
  }
  out.dropped = M - static_cast<int>(out.processes.size());
  if (out.dropped > 0.2 * M) {
    throw NonConvergenceError("score bootstrap: " + std::to_string(out.dropped) + " of " + std::to_string(M) +
                                  " replicates failed",
                              out.dropped, 0.0);
  }
  if (out.processes.size() < 2) throw NonConvergenceError("score bootstrap: fewer than two replicates", 0, 0.0);
  if (out.dropped > 0) out.warnings.push_back(std::to_string(out.dropped) + " bootstrap replicates dropped");
  return out;
}

}  // namespace

BootstrapProcesses bootstrap_score_processes(const Dataset& ds, const TransformFamily& fam,
                                             std::span<const double> grid, int M, const WeightScheme& scheme,
                                             std::uint64_t seed, const FitConfig& cfg) {
  cfg.check();
  const Model model(ds, fam, event_grid(ds));
  const NullFit null = fit_null(model, cfg);
  const ScoreProcess observed = score_process(model, null.psi, grid);
  return bootstrap_from_null(model, null, observed, M, scheme, seed, cfg);
}

std::vector<Eigen::MatrixXd> vhat(const std::vector<ScoreProcess>& processes) {
  if (processes.empty()) throw DomainError("vhat needs at least one replicate");
  const std::size_t K = processes.front().values.size();
  const double M = static_cast<double>(processes.size());
  std::vector<Eigen::MatrixXd> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::Index r = processes.front().values[k].size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(r);
    for (const auto& p : processes) {
      if (p.values.size() != K) throw DomainError("replicates disagree on the grid");
      mean += p.values[k];
    }
    mean /= M;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(r, r);
    for (const auto& p : processes) {
      const Eigen::VectorXd c = p.values[k] - mean;
      v.noalias() += c * c.transpose();
    }
    out[k] = v / M;
  }
  return out;
}

namespace {

// Inverses used for every statistic on one grid; empty matrix marks an
// excluded point.
struct Weighting {
  std::vector<Eigen::MatrixXd> inv;
  double condition = 1.0;
  int excluded = 0;
  int ridged = 0;
};

Weighting weighting(const std::vector<Eigen::MatrixXd>& V) {
  Weighting w;
  w.inv.resize(V.size());
  for (std::size_t k = 0; k < V.size(); ++k) {
    const Eigen::MatrixXd& v = V[k];
    const double tr = v.trace();
    if (!(tr > 0.0)) {
      ++w.excluded;
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    w.condition = std::max(w.condition, cond);
    Eigen::VectorXd ev = es.eigenvalues();
    if (cond > 1e12) {
      ev.array() += 1e-8 * tr / static_cast<double>(v.rows());
      ++w.ridged;
    }
    w.inv[k] = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  }
  if (w.excluded == static_cast<int>(V.size())) throw NumericError("V is zero at every grid point");
  return w;
}

Statistics apply(const ScoreProcess& S, const Weighting& w, double a, double b, const ScoreProcess* centre) {
  const std::size_t K = S.values.size();
  Statistics st;
  st.quadratic.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (w.inv[k].size() == 0) continue;
    const Eigen::VectorXd s = centre ? Eigen::VectorXd(S.values[k] - centre->values[k]) : S.values[k];
    const double val = s.dot(w.inv[k] * s);
    st.quadratic[k] = val;
    st.t_sup = std::max(st.t_sup, val);
    const double lo = std::max(a, S.grid[k]);
    const double hi = std::min(b, k + 1 < K ? S.grid[k + 1] : b);
    if (hi > lo) st.t_int += val * (hi - lo);
  }
  st.vhat_condition = w.condition;
  st.excluded = w.excluded;
  return st;
}

}  // namespace

Statistics test_statistics(const ScoreProcess& S, const std::vector<Eigen::MatrixXd>& V, double a, double b) {
  check_range(a, b);
  if (S.values.size() != V.size() || S.grid.size() != V.size()) throw DomainError("S and V differ in length");
  const Weighting w = weighting(V);
  Statistics st = apply(S, w, a, b, nullptr);
  if (w.excluded > 0) st.warnings.push_back(std::to_string(w.excluded) + " grid points with zero V excluded");
  if (w.ridged > 0) st.warnings.push_back("V nearly singular at " + std::to_string(w.ridged) + " grid points; ridge added");
  return st;
}

TestResult run_test(const Dataset& ds, const TransformFamily& fam, double a, double b, int M,
                    const WeightScheme& scheme, double level, std::uint64_t seed, const FitConfig& cfg) {
  cfg.check();
  check_range(a, b);
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  TestResult res;
  res.level = level;
  res.a = a;
  res.b = b;
  if (M < 50) res.warnings.push_back("fewer than 50 bootstrap replicates");

  const Model model(ds, fam, event_grid(ds));
  res.null_fit = fit_null(model, cfg);
  for (const auto& w : res.null_fit.details.warnings) res.warnings.push_back(w);
  const std::vector<double> grid = score_grid(ds, a, b);
  res.observed = score_process(model, res.null_fit.psi, grid);

  BootstrapProcesses boot = bootstrap_from_null(model, res.null_fit, res.observed, M, scheme, seed, cfg);
  res.M = static_cast<int>(boot.processes.size());
  res.dropped = boot.dropped;
  for (auto& w : boot.warnings) res.warnings.push_back(std::move(w));

  res.V = vhat(boot.processes);
  ScoreProcess centre;
  centre.grid = grid;
  centre.values.assign(grid.size(), Eigen::VectorXd::Zero(1 + ds.q));
  for (const auto& p : boot.processes) {
    for (std::size_t k = 0; k < grid.size(); ++k) centre.values[k] += p.values[k];
  }
  for (auto& v : centre.values) v /= static_cast<double>(res.M);

  const Weighting w = weighting(res.V);
  const Statistics obs = apply(res.observed, w, a, b, nullptr);
  res.t_sup = obs.t_sup;
  res.t_int = obs.t_int;
  res.vhat_condition = w.condition;
  res.excluded = w.excluded;
  if (w.excluded > 0) res.warnings.push_back(std::to_string(w.excluded) + " grid points with zero V excluded");
  if (w.ridged > 0) res.warnings.push_back("V nearly singular at " + std::to_string(w.ridged) + " grid points; ridge added");

  res.boot_sup.reserve(boot.processes.size());
  res.boot_int.reserve(boot.processes.size());
  int above_sup = 0;
  int above_int = 0;
  for (const auto& p : boot.processes) {
    const Statistics st = apply(p, w, a, b, &centre);
    res.boot_sup.push_back(st.t_sup);
    res.boot_int.push_back(st.t_int);
    if (st.t_sup >= res.t_sup) ++above_sup;
    if (st.t_int >= res.t_int) ++above_int;
  }
  res.crit_sup = quantile(res.boot_sup, 1.0 - level);
  res.crit_int = quantile(res.boot_int, 1.0 - level);
  res.p_sup = (1.0 + above_sup) / (1.0 + res.M);
  res.p_int = (1.0 + above_int) / (1.0 + res.M);
  res.reject_sup = res.t_sup > res.crit_sup;
  res.reject_int = res.t_int > res.crit_int;
  return res;
}

Eigen::MatrixXd plugin_covariance(const TransformFamily& fam, const RegularParams& psi0, const Dataset& ds,
                                  double zeta1, double zeta2) {
  const Model model(ds, fam, psi0.A.times);
  const int q = ds.q;
  const int r = 1 + q;
  const int P = model.gamma_dim();
  const int nu = P - r;
  const int K = model.grid_size();
  const Eigen::VectorXd g = psi0.gamma();
  const InfoBlocks b1 = model.info_blocks(g, groups_above(ds, zeta1), psi0.A.jumps);
  const InfoBlocks b2 = model.info_blocks(g, groups_above(ds, zeta2), psi0.A.jumps);
  const InfoBlocks bmax = model.info_blocks(g, groups_above(ds, std::max(zeta1, zeta2)), psi0.A.jumps);

  // Nuisance directions: beta and the jump directions. Their block does not
  // depend on the group assignment.
  Eigen::MatrixXd s22(nu + K, nu + K);
  s22.topLeftCorner(nu, nu) = b1.gg.bottomRightCorner(nu, nu);
  s22.topRightCorner(nu, K) = b1.ga.bottomRows(nu);
  s22.bottomLeftCorner(K, nu) = b1.ga.bottomRows(nu).transpose();
  s22.bottomRightCorner(K, K) = b1.aa;
  auto cross = [&](const InfoBlocks& ib) {
    Eigen::MatrixXd c(r, nu + K);
    c.leftCols(nu) = ib.gg.topRightCorner(r, nu);
    c.rightCols(K) = ib.ga.topRows(r);
    return c;
  };
  const Eigen::MatrixXd s12a = cross(b1);
  const Eigen::MatrixXd s12b = cross(b2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s22);
  Eigen::VectorXd ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  if (!(lmax > 0.0)) throw NumericError("nuisance information is not positive");
  if (ev.minCoeff() < 1e-12 * lmax) ev.array() += 1e-8 * s22.trace() / static_cast<double>(s22.rows());
  const Eigen::MatrixXd inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return bmax.gg.topLeftCorner(r, r) - s12a * inv * s12b.transpose();
}

}  // namespace transcp
