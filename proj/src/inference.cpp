#include "transcp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "transcp/error.hpp"
#include "transcp/model.hpp"
#include "transcp/parallel.hpp"
#include "transcp/stats.hpp"

namespace transcp {

WeightScheme WeightScheme::exp_truncated(double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap)) throw DomainError("truncation point must be positive");
  const double e = std::exp(-cap);
  const double mass = -std::expm1(-cap);
  const double mu = 1.0 - cap * e / mass;
  const double m2 = (2.0 - e * (cap * cap + 2.0 * cap + 2.0)) / mass;
  return WeightScheme(Kind::ExpTruncated, cap, mu, std::sqrt(m2 - mu * mu));
}

WeightScheme WeightScheme::exponential() {
  return WeightScheme(Kind::Exponential, std::numeric_limits<double>::infinity(), 1.0, 1.0);
}

double WeightScheme::draw(Rng& rng) const {
  std::exponential_distribution<double> ex(1.0);
  double x = ex(rng);
  while (x > cap_) x = ex(rng);
  return x;
}

std::vector<double> draw_weights(std::size_t n, const WeightScheme& scheme, Rng& rng) {
  if (n < 2) throw DomainError("draw_weights needs n >= 2");
  if (!(scheme.sigma_kappa() > 0.0)) throw DomainError("degenerate weight scheme");
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = scheme.draw(rng);
    total += x;
  }
  const double avg = total / static_cast<double>(n);
  for (auto& x : w) x /= avg;
  return w;
}

namespace {

std::vector<std::string> gamma_names(int q, int d) {
  std::vector<std::string> names{"alpha"};
  for (int j = 1; j <= q; ++j) names.push_back("eta" + std::to_string(j));
  for (int j = 1; j <= d; ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

}  // namespace

PsiBootstrap bootstrap_psi_weights(const Dataset& ds, const TransformFamily& fam, const FitResult& fit,
                                   const std::vector<std::vector<double>>& weights, double se_scale,
                                   double level, const FitConfig& cfg) {
  if (!fit.converged) throw DomainError("bootstrap_psi needs a converged fit");
  if (weights.size() < 2) throw DomainError("bootstrap_psi needs B >= 2");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  const auto& psi = fit.theta_hat.psi;
  const Model base(ds, fam, psi.A.times);
  const GroupMask up = groups_above(ds, fit.theta_hat.zeta);
  const Eigen::VectorXd g0 = psi.gamma();
  const int P = static_cast<int>(g0.size());
  const int K = static_cast<int>(psi.A.times.size());
  const std::size_t B = weights.size();

  std::vector<GammaFit> fits(B);
  std::vector<char> ok(B, 0);
  parallel_for(B, cfg.threads, [&](std::size_t b) {
    if (weights[b].size() != ds.n()) throw DomainError("weight vector length differs from n");
    try {
      fits[b] = maximize_gamma(base.with_weights(weights[b]), up, g0, psi.A.jumps, cfg);
      ok[b] = 1;
    } catch (const NonConvergenceError&) {
    } catch (const NumericError&) {
    } catch (const DomainError&) {
    }
  });

  PsiBootstrap out;
  out.level = level;
  out.names = gamma_names(ds.q, ds.d());
  out.estimate = g0;
  out.replicates = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
  out.failures = static_cast<int>(B) - out.replicates;
  if (out.failures > 0.2 * static_cast<double>(B)) {
    throw NonConvergenceError("bootstrap_psi: " + std::to_string(out.failures) + " of " + std::to_string(B) +
                                  " replicates failed",
                              out.failures, 0.0);
  }
  if (out.replicates < 2) throw NonConvergenceError("bootstrap_psi: fewer than two replicates converged", 0, 0.0);
  if (out.failures > 0) out.warnings.push_back(std::to_string(out.failures) + " bootstrap replicates dropped");

  out.gamma_draws.resize(out.replicates, P);
  Eigen::MatrixXd cum(out.replicates, K);
  int row = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (!ok[b]) continue;
    out.gamma_draws.row(row) = fits[b].gamma.transpose();
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      acc += fits[b].jumps[static_cast<std::size_t>(k)];
      cum(row, k) = acc;
    }
    ++row;
  }
  auto column_sd = [](const Eigen::MatrixXd& m, int j) {
    const Eigen::VectorXd col = m.col(j);
    return sample_sd(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  };
  const double z = normal_quantile(0.5 + level / 2.0);
  out.se.resize(P);
  for (int j = 0; j < P; ++j) out.se[j] = se_scale * column_sd(out.gamma_draws, j);
  out.lower = out.estimate - z * out.se;
  out.upper = out.estimate + z * out.se;

  out.A_times = psi.A.times;
  double acc = 0.0;
  for (int k = 0; k < K; ++k) {
    acc += psi.A.jumps[static_cast<std::size_t>(k)];
    const double se = se_scale * column_sd(cum, k);
    out.A_estimate.push_back(acc);
    out.A_se.push_back(se);
    out.A_lower.push_back(std::max(0.0, acc - z * se));
    out.A_upper.push_back(acc + z * se);
  }
  return out;
}

PsiBootstrap bootstrap_psi(const Dataset& ds, const TransformFamily& fam, const FitResult& fit, int B,
                           const WeightScheme& scheme, std::uint64_t seed, double level, const FitConfig& cfg) {
  if (B < 2) throw DomainError("bootstrap_psi needs B >= 2");
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    Rng rng = stream_rng(seed, static_cast<std::uint64_t>(b));
    weights[static_cast<std::size_t>(b)] = draw_weights(ds.n(), scheme, rng);
  }
  return bootstrap_psi_weights(ds, fam, fit, weights, scheme.mu_kappa() / scheme.sigma_kappa(), level, cfg);
}

double kde_at(std::span<const double> ys, double point) {
  if (ys.empty()) throw DomainError("kde_at needs data");
  const double n = static_cast<double>(ys.size());
  double bw = 1.0;
  if (ys.size() > 1) {
    const double sd = sample_sd(ys);
    if (!(sd > 0.0)) throw DomainError("kde_at: all values identical");
    const double iqr = quantile(ys, 0.75) - quantile(ys, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    bw = 0.9 * spread * std::pow(n, -0.2);
  }
  double total = 0.0;
  for (double y : ys) {
    const double u = (point - y) / bw;
    total += std::exp(-0.5 * u * u);
  }
  return total / (n * bw * std::sqrt(2.0 * M_PI));
}

JumpSamples build_jump_samples(const Dataset& ds, const TransformFamily& fam, const Theta& theta) {
  const int n = static_cast<int>(ds.n());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return ds.subjects[static_cast<std::size_t>(i)].y < ds.subjects[static_cast<std::size_t>(j)].y;
  });
  const double zeta = theta.zeta;
  int l = 0;
  int below = 0;
  for (int p = 0; p < n; ++p) {
    const double y = ds.subjects[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])].y;
    if (y == zeta) l = p + 1;
    if (y < zeta) ++below;
  }
  if (l == 0) throw DomainError("zeta-hat is not one of the observed Y values");
  JumpSamples out;
  out.l_tilde = l;
  out.m_tilde = std::min(n - l, below);
  if (out.m_tilde < 16) throw DomainError("insufficient observations flanking zeta-hat");
  out.c1 = static_cast<int>(std::lround(std::pow(out.m_tilde, 0.25)));
  out.c2 = static_cast<int>(std::lround(std::pow(out.m_tilde, 0.75)));
  const int k = out.c2 - out.c1 + 1;

  const Model model(ds, fam, theta.psi.A.times);
  const Eigen::VectorXd g = theta.psi.gamma();
  const SubjectTerms lower = model.terms(g, all_groups(ds, 0), theta.psi.A.jumps, false);
  const SubjectTerms upper = model.terms(g, all_groups(ds, 1), theta.psi.A.jumps, false);
  auto diff_at = [&](int pos) {  // 1-based order position
    const int i = order[static_cast<std::size_t>(pos - 1)];
    return lower.ell[i] - upper.ell[i];
  };
  for (int j = 1; j <= k; ++j) {
    out.vplus.push_back(diff_at(l + out.c1 + j - 1));
    out.vminus.push_back(diff_at(l - out.c1 - j));
  }
  return out;
}

JumpPath simulate_jump_path(double h_hat, std::span<const double> fplus, std::span<const double> fminus,
                            double lower, double upper, Rng& rng) {
  if (!(h_hat > 0.0) || !std::isfinite(h_hat)) throw DomainError("simulate_vstar needs h_hat > 0");
  if (!(lower <= 0.0 && upper >= 0.0)) throw DomainError("simulate_vstar bounds must straddle 0");
  if (fplus.empty() || fminus.empty()) throw DomainError("simulate_vstar needs jump samples on both sides");
  std::exponential_distribution<double> spacing(h_hat);
  std::uniform_int_distribution<std::size_t> pick_plus(0, fplus.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_minus(0, fminus.size() - 1);
  JumpPath left;
  double s = 0.0;
  double q = 0.0;
  for (;;) {
    s += spacing(rng);
    if (-s < lower) break;
    q -= fminus[pick_minus(rng)];
    left.at.push_back(-s);
    left.value.push_back(q);
  }
  JumpPath path;
  path.at.assign(left.at.rbegin(), left.at.rend());
  path.value.assign(left.value.rbegin(), left.value.rend());
  double t = 0.0;
  q = 0.0;
  for (;;) {
    t += spacing(rng);
    if (t > upper) break;
    q += fplus[pick_plus(rng)];
    path.at.push_back(t);
    path.value.push_back(q);
  }
  return path;
}

double minimal_argmax(const JumpPath& path) {
  double best_v = 0.0;
  double best_q = 0.0;
  for (std::size_t k = 0; k < path.at.size(); ++k) {
    const double v = path.at[k];
    const double q = path.value[k];
    if (q > best_q || (q == best_q && std::abs(v) < std::abs(best_v))) {
      best_q = q;
      best_v = v;
    }
  }
  return best_v;
}

double simulate_vstar(double h_hat, std::span<const double> fplus, std::span<const double> fminus, double lower,
                      double upper, Rng& rng) {
  return minimal_argmax(simulate_jump_path(h_hat, fplus, fminus, lower, upper, rng));
}

ChangePointCI interval_from_draws(double zeta, double n, double a, double b, double level,
                                  std::span<const double> draws) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  const double pi = 1.0 - level;
  ChangePointCI ci;
  ci.level = level;
  ci.zeta_hat = zeta;
  ci.vstar_draws = static_cast<int>(draws.size());
  ci.q_low = quantile(draws, pi / 2.0);
  ci.q_high = quantile(draws, 1.0 - pi / 2.0);
  ci.lower = std::max(a, zeta - ci.q_high / n);
  ci.upper = std::min(b, zeta - ci.q_low / n);
  return ci;
}

ChangePointCI cp_confidence_interval(const Dataset& ds, const TransformFamily& fam, const FitResult& fit,
                                     double level, int B, std::uint64_t seed, int threads) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  if (B < 2) throw DomainError("cp_confidence_interval needs B >= 2");
  const JumpSamples js = build_jump_samples(ds, fam, fit.theta_hat);
  std::vector<double> ys;
  ys.reserve(ds.n());
  for (const auto& s : ds.subjects) ys.push_back(s.y);
  const double zeta = fit.theta_hat.zeta;
  const double n = static_cast<double>(ds.n());
  const double h = kde_at(ys, zeta);
  std::vector<double> draws(static_cast<std::size_t>(B));
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    Rng rng = stream_rng(seed, i);
    draws[i] = simulate_vstar(h, js.vplus, js.vminus, -n * (zeta - fit.a), n * (fit.b - zeta), rng);
  });
  ChangePointCI ci = interval_from_draws(zeta, n, fit.a, fit.b, level, draws);
  ci.h_hat = h;
  ci.c1 = js.c1;
  ci.c2 = js.c2;
  return ci;
}

}  // namespace transcp
