#include "transcp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "transcp/error.hpp"
#include "transcp/params.hpp"

namespace transcp {

double CumHazard::at(double t) const {
  double s = 0.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) s += jumps[k];
  return s;
}

Eigen::VectorXd RegularParams::gamma() const {
  Eigen::VectorXd g(gamma_dim());
  g[0] = alpha;
  g.segment(1, eta.size()) = eta;
  g.segment(1 + eta.size(), beta.size()) = beta;
  return g;
}

void RegularParams::set_gamma(const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (g.size() != gamma_dim()) throw DomainError("gamma has the wrong dimension");
  alpha = g[0];
  eta = g.segment(1, eta.size());
  beta = g.segment(1 + eta.size(), beta.size());
}

RegularParams RegularParams::zeros(int q, int d) {
  RegularParams p;
  p.eta = Eigen::VectorXd::Zero(q);
  p.beta = Eigen::VectorXd::Zero(d);
  return p;
}

GroupMask groups_above(const Dataset& ds, double zeta) {
  GroupMask up(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) up[i] = ds.subjects[i].y > zeta ? 1 : 0;
  return up;
}

GroupMask all_groups(const Dataset& ds, char value) { return GroupMask(ds.n(), value); }

Model::Model(const Dataset& ds, TransformFamily fam, std::vector<double> grid) {
  ds.check();
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw DomainError("jump grid must be strictly ascending");
  }
  auto lay = std::make_shared<Layout>(Layout{std::make_shared<const Dataset>(ds), fam, std::move(grid), 0, 0, {}, {}, {}, {}, {}, {}, {}});
  lay->q = ds.q;
  lay->d = ds.d();
  const auto& g = lay->grid;
  const int n = static_cast<int>(ds.n());
  std::vector<Eigen::VectorXd> cols;
  lay->seg_offset.reserve(n + 1);
  lay->seg_offset.push_back(0);
  lay->z_at_v.resize(lay->d, n);
  lay->event_index.assign(n, -1);
  lay->event_off_grid.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const auto& s = ds.subjects[static_cast<std::size_t>(i)];
    const int m = static_cast<int>(std::upper_bound(g.begin(), g.end(), s.v) - g.begin());
    const auto& bps = s.z.breakpoints();
    for (std::size_t p = 0; p < bps.size(); ++p) {
      int b = p == 0 ? 0 : static_cast<int>(std::upper_bound(g.begin(), g.end(), bps[p]) - g.begin());
      int e = p + 1 < bps.size() ? static_cast<int>(std::upper_bound(g.begin(), g.end(), bps[p + 1]) - g.begin())
                                 : m;
      e = std::min(e, m);
      if (b >= e) continue;
      lay->seg_begin.push_back(b);
      lay->seg_end.push_back(e);
      cols.push_back(s.z.values()[p]);
    }
    lay->seg_offset.push_back(static_cast<int>(lay->seg_begin.size()));
    lay->z_at_v.col(i) = s.z.value(s.v);
    if (s.delta == 1) {
      if (m > 0 && g[static_cast<std::size_t>(m - 1)] == s.v) {
        lay->event_index[static_cast<std::size_t>(i)] = m - 1;
      } else {
        lay->event_off_grid[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
  lay->seg_z.resize(lay->d, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) lay->seg_z.col(static_cast<Eigen::Index>(c)) = cols[c];
  layout_ = std::move(lay);
  weights_.assign(static_cast<std::size_t>(n), 1.0);
}

Model Model::with_weights(std::vector<double> weights) const {
  if (weights.size() != static_cast<std::size_t>(n())) throw DomainError("one weight per subject required");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and nonnegative");
  }
  return Model(layout_, std::move(weights));
}

void Model::design(int seg, char up, Eigen::VectorXd& x) const {
  const auto& lay = *layout_;
  const auto z = lay.seg_z.col(seg);
  x[0] = up ? 1.0 : 0.0;
  for (int j = 0; j < lay.q; ++j) x[1 + j] = up ? z[lay.d - lay.q + j] : 0.0;
  x.segment(1 + lay.q, lay.d) = z;
}

Eigen::VectorXd Model::event_mass() const {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(grid_size());
  for (int i = 0; i < n(); ++i) {
    const int k = layout_->event_index[static_cast<std::size_t>(i)];
    if (k >= 0) mass[k] += weights_[static_cast<std::size_t>(i)];
  }
  return mass;
}

namespace {

std::vector<double> prefix_sums(std::span<const double> jumps) {
  std::vector<double> acc(jumps.size() + 1, 0.0);
  for (std::size_t k = 0; k < jumps.size(); ++k) acc[k + 1] = acc[k] + jumps[k];
  return acc;
}

}  // namespace

SubjectTerms Model::terms(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps,
                          bool with_rx) const {
  const auto& lay = *layout_;
  const int nn = n();
  const int P = gamma_dim();
  if (gamma.size() != P) throw DomainError("gamma has the wrong dimension");
  if (static_cast<int>(jumps.size()) != grid_size()) throw DomainError("one jump per grid time required");
  if (static_cast<int>(up.size()) != nn) throw DomainError("one group flag per subject required");

  const double alpha = gamma[0];
  const auto eta = gamma.segment(1, lay.q);
  const auto beta = gamma.segment(1 + lay.q, lay.d);
  const auto acc = prefix_sums(jumps);

  SubjectTerms t;
  t.H.resize(nn);
  t.xi0.resize(nn);
  t.xi1.resize(nn);
  t.ell.resize(nn);
  t.rv.resize(nn);
  if (with_rx) t.rx = Eigen::MatrixXd::Zero(nn, P);
  Eigen::VectorXd x(P);
  for (int i = 0; i < nn; ++i) {
    const char u = up[static_cast<std::size_t>(i)];
    double h = 0.0;
    for (int s = lay.seg_offset[i]; s < lay.seg_offset[i + 1]; ++s) {
      const auto z = lay.seg_z.col(s);
      double r = beta.dot(z);
      if (u) r += alpha + eta.dot(z.tail(lay.q));
      const double mass = std::exp(r) * (acc[lay.seg_end[s]] - acc[lay.seg_begin[s]]);
      h += mass;
      if (with_rx) {
        design(s, u, x);
        t.rx.row(i) += mass * x.transpose();
      }
    }
    const auto zv = lay.z_at_v.col(i);
    double rv = beta.dot(zv);
    if (u) rv += alpha + eta.dot(zv.tail(lay.q));
    const int delta = lay.ds->subjects[static_cast<std::size_t>(i)].delta;
    const GDerivs g = g_derivs(lay.fam, h);
    if (!(g.dg > 0.0)) throw NumericError("G' is not positive at H = " + std::to_string(h));
    const double ratio = g.ddg / g.dg;
    t.H[i] = h;
    t.rv[i] = rv;
    t.xi0[i] = g.dg - delta * ratio;
    t.xi1[i] = g.ddg - delta * (g.dddg / g.dg - ratio * ratio);
    t.ell[i] = delta * (std::log(g.dg) + rv) - g.g;
  }
  return t;
}

double Model::loglik(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const {
  const auto& lay = *layout_;
  const double ninf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n(); ++i) {
    if (lay.event_off_grid[static_cast<std::size_t>(i)] && weights_[static_cast<std::size_t>(i)] > 0.0) return ninf;
    const int k = lay.event_index[static_cast<std::size_t>(i)];
    if (k >= 0 && !(jumps[static_cast<std::size_t>(k)] > 0.0) && weights_[static_cast<std::size_t>(i)] > 0.0) {
      return ninf;
    }
  }
  const SubjectTerms t = terms(gamma, up, jumps, false);
  const double nd = static_cast<double>(n());
  double total = 0.0;
  for (int i = 0; i < n(); ++i) {
    const double w = weights_[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const int k = lay.event_index[static_cast<std::size_t>(i)];
    double li = t.ell[i];
    if (k >= 0) li += std::log(nd * jumps[static_cast<std::size_t>(k)]);
    total += w * li;
  }
  return total / nd;
}

Eigen::MatrixXd Model::score_contributions(const Eigen::VectorXd& gamma, const GroupMask& up,
                                           std::span<const double> jumps) const {
  const auto& lay = *layout_;
  const SubjectTerms t = terms(gamma, up, jumps, true);
  Eigen::MatrixXd u = -t.rx;
  for (int i = 0; i < n(); ++i) u.row(i) *= t.xi0[i];
  for (int i = 0; i < n(); ++i) {
    if (lay.ds->subjects[static_cast<std::size_t>(i)].delta != 1) continue;
    const char g = up[static_cast<std::size_t>(i)];
    const auto zv = lay.z_at_v.col(i);
    if (g) {
      u(i, 0) += 1.0;
      u.row(i).segment(1, lay.q) += zv.tail(lay.q).transpose();
    }
    u.row(i).segment(1 + lay.q, lay.d) += zv.transpose();
  }
  return u;
}

Eigen::VectorXd Model::score(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const {
  const Eigen::MatrixXd u = score_contributions(gamma, up, jumps);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(gamma_dim());
  for (int i = 0; i < n(); ++i) s += weights_[static_cast<std::size_t>(i)] * u.row(i).transpose();
  return s / static_cast<double>(n());
}

Eigen::MatrixXd Model::info(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const {
  const auto& lay = *layout_;
  const int P = gamma_dim();
  const auto acc = prefix_sums(jumps);
  const SubjectTerms t = terms(gamma, up, jumps, true);
  const double alpha = gamma[0];
  const auto eta = gamma.segment(1, lay.q);
  const auto beta = gamma.segment(1 + lay.q, lay.d);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd x(P);
  for (int i = 0; i < n(); ++i) {
    const double w = weights_[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const char u = up[static_cast<std::size_t>(i)];
    Eigen::MatrixXd rxx = Eigen::MatrixXd::Zero(P, P);
    for (int s = lay.seg_offset[i]; s < lay.seg_offset[i + 1]; ++s) {
      const auto z = lay.seg_z.col(s);
      double r = beta.dot(z);
      if (u) r += alpha + eta.dot(z.tail(lay.q));
      const double mass = std::exp(r) * (acc[lay.seg_end[s]] - acc[lay.seg_begin[s]]);
      design(s, u, x);
      rxx.noalias() += mass * x * x.transpose();
    }
    const Eigen::VectorXd rx = t.rx.row(i).transpose();
    out.noalias() += w * (t.xi0[i] * rxx + t.xi1[i] * rx * rx.transpose());
  }
  return out / static_cast<double>(n());
}

Eigen::VectorXd Model::profile_denominators(const Eigen::VectorXd& gamma, const GroupMask& up,
                                            std::span<const double> jumps) const {
  const auto& lay = *layout_;
  const SubjectTerms t = terms(gamma, up, jumps, false);
  const double alpha = gamma[0];
  const auto eta = gamma.segment(1, lay.q);
  const auto beta = gamma.segment(1 + lay.q, lay.d);
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(grid_size() + 1);
  for (int i = 0; i < n(); ++i) {
    const double w = weights_[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const char u = up[static_cast<std::size_t>(i)];
    for (int s = lay.seg_offset[i]; s < lay.seg_offset[i + 1]; ++s) {
      const auto z = lay.seg_z.col(s);
      double r = beta.dot(z);
      if (u) r += alpha + eta.dot(z.tail(lay.q));
      const double v = w * t.xi0[i] * std::exp(r);
      diff[lay.seg_begin[s]] += v;
      diff[lay.seg_end[s]] -= v;
    }
  }
  Eigen::VectorXd out(grid_size());
  double run = 0.0;
  for (int k = 0; k < grid_size(); ++k) {
    run += diff[k];
    out[k] = run;
  }
  return out;
}

InfoBlocks Model::info_blocks(const Eigen::VectorXd& gamma, const GroupMask& up,
                              std::span<const double> jumps) const {
  const auto& lay = *layout_;
  const int P = gamma_dim();
  const int K = grid_size();
  const double nd = static_cast<double>(n());
  const SubjectTerms t = terms(gamma, up, jumps, true);
  const double alpha = gamma[0];
  const auto eta = gamma.segment(1, lay.q);
  const auto beta = gamma.segment(1 + lay.q, lay.d);

  InfoBlocks out;
  out.gg = info(gamma, up, jumps);
  out.aa_is_diagonal = lay.fam.is_cox();

  Eigen::MatrixXd ga_diff = Eigen::MatrixXd::Zero(P, K + 1);
  Eigen::VectorXd diag_diff = Eigen::VectorXd::Zero(K + 1);
  Eigen::MatrixXd aa_diff;
  if (!out.aa_is_diagonal) aa_diff = Eigen::MatrixXd::Zero(K + 1, K + 1);
  Eigen::VectorXd x(P);
  std::vector<double> seg_e;
  for (int i = 0; i < n(); ++i) {
    const double w = weights_[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const char u = up[static_cast<std::size_t>(i)];
    const Eigen::VectorXd rx = t.rx.row(i).transpose();
    const int s0 = lay.seg_offset[i];
    const int s1 = lay.seg_offset[i + 1];
    seg_e.assign(static_cast<std::size_t>(s1 - s0), 0.0);
    for (int s = s0; s < s1; ++s) {
      const auto z = lay.seg_z.col(s);
      double r = beta.dot(z);
      if (u) r += alpha + eta.dot(z.tail(lay.q));
      const double e = std::exp(r);
      seg_e[static_cast<std::size_t>(s - s0)] = e;
      design(s, u, x);
      const Eigen::VectorXd v = w * e * (t.xi0[i] * x + t.xi1[i] * rx);
      ga_diff.col(lay.seg_begin[s]) += v;
      ga_diff.col(lay.seg_end[s]) -= v;
      diag_diff[lay.seg_begin[s]] += w * t.xi0[i] * e;
      diag_diff[lay.seg_end[s]] -= w * t.xi0[i] * e;
    }
    if (!out.aa_is_diagonal && t.xi1[i] != 0.0) {
      for (int s = s0; s < s1; ++s) {
        for (int r = s0; r < s1; ++r) {
          const double v = w * t.xi1[i] * seg_e[static_cast<std::size_t>(s - s0)] *
                           seg_e[static_cast<std::size_t>(r - s0)];
          aa_diff(lay.seg_begin[s], lay.seg_begin[r]) += v;
          aa_diff(lay.seg_begin[s], lay.seg_end[r]) -= v;
          aa_diff(lay.seg_end[s], lay.seg_begin[r]) -= v;
          aa_diff(lay.seg_end[s], lay.seg_end[r]) += v;
        }
      }
    }
  }

  out.ga.resize(P, K);
  Eigen::VectorXd run = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd diag(K);
  double drun = 0.0;
  for (int k = 0; k < K; ++k) {
    run += ga_diff.col(k);
    drun += diag_diff[k];
    out.ga.col(k) = run * jumps[static_cast<std::size_t>(k)] / nd;
    diag[k] = drun * jumps[static_cast<std::size_t>(k)] / nd;
  }
  if (out.aa_is_diagonal) {
    out.aa = diag.asDiagonal();
  } else {
    // 2-D prefix sums turn the rectangle updates into the dense Xi1 term
    for (int k = 0; k <= K; ++k) {
      for (int l = 1; l <= K; ++l) aa_diff(k, l) += aa_diff(k, l - 1);
    }
    for (int k = 1; k <= K; ++k) aa_diff.row(k) += aa_diff.row(k - 1);
    out.aa.resize(K, K);
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        out.aa(k, l) = aa_diff(k, l) * jumps[static_cast<std::size_t>(k)] * jumps[static_cast<std::size_t>(l)] / nd;
      }
    }
    out.aa.diagonal() += diag;
  }
  return out;
}

double Model::score_A_direction(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps,
                                double tt) const {
  const auto& lay = *layout_;
  const auto& g = lay.grid;
  const int kt = static_cast<int>(std::upper_bound(g.begin(), g.end(), tt) - g.begin());
  const auto acc = prefix_sums(jumps);
  const SubjectTerms t = terms(gamma, up, jumps, false);
  const double alpha = gamma[0];
  const auto eta = gamma.segment(1, lay.q);
  const auto beta = gamma.segment(1 + lay.q, lay.d);
  double total = 0.0;
  for (int i = 0; i < n(); ++i) {
    const double w = weights_[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const auto& subj = lay.ds->subjects[static_cast<std::size_t>(i)];
    const char u = up[static_cast<std::size_t>(i)];
    double r_t = 0.0;
    for (int s = lay.seg_offset[i]; s < lay.seg_offset[i + 1]; ++s) {
      const int b = std::min(lay.seg_begin[s], kt);
      const int e = std::min(lay.seg_end[s], kt);
      if (b >= e) continue;
      const auto z = lay.seg_z.col(s);
      double r = beta.dot(z);
      if (u) r += alpha + eta.dot(z.tail(lay.q));
      r_t += std::exp(r) * (acc[e] - acc[b]);
    }
    const double dn = (subj.delta == 1 && subj.v <= tt) ? 1.0 : 0.0;
    total += w * (dn - t.xi0[i] * r_t);
  }
  return total / static_cast<double>(n());
}

}  // namespace transcp
