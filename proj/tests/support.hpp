#pragma once

// Test-side helpers: small data generators and oracles written without the
// library's evaluator.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/families.hpp"
#include "transcp/params.hpp"

namespace testsupport {

using transcp::CovariatePath;
using transcp::Dataset;
using transcp::Subject;

// Z ~ N(0, I_d), Y ~ N(0, 1), Cox-type exponential times with linear
// predictor lp(z, y), uniform censoring on (0, cens). Optional step paths:
// each subject's covariates move once at a uniform time.
inline Dataset random_dataset(int n, int p, int q, unsigned seed,
                              const std::function<double(const Eigen::VectorXd&, double)>& lp,
                              double cens = 3.0, bool steps = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nrm;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  ds.p = p;
  ds.q = q;
  const int d = p + q;
  double vmax = 0.0;
  for (int i = 0; i < n; ++i) {
    Subject s;
    s.id = "s" + std::to_string(i);
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z[j] = nrm(rng);
    s.y = nrm(rng);
    const double t = -std::log(unif(rng)) * std::exp(-lp(z, s.y));
    const double c = cens * unif(rng);
    s.v = std::max(std::min(t, c), 1e-6);
    s.delta = t <= c ? 1 : 0;
    if (steps) {
      Eigen::VectorXd z2(d);
      for (int j = 0; j < d; ++j) z2[j] = nrm(rng);
      s.z = CovariatePath({0.0, 0.1 + unif(rng)}, {z, z2});
    } else {
      s.z = CovariatePath(z);
    }
    vmax = std::max(vmax, s.v);
    ds.subjects.push_back(s);
  }
  ds.tau = vmax;
  return ds;
}

// Distinct event times.
inline std::vector<double> events_of(const Dataset& ds) {
  std::vector<double> t;
  for (const auto& s : ds.subjects) {
    if (s.delta == 1) t.push_back(s.v);
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Cox partial likelihood with Breslow ties, time-dependent covariates
// evaluated at each event time. Returns value; fills gradient and Hessian.
inline double cox_partial(const Dataset& ds, const Eigen::VectorXd& beta, Eigen::VectorXd* grad,
                          Eigen::MatrixXd* hess) {
  const int d = static_cast<int>(beta.size());
  double val = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (double t : events_of(ds)) {
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
    int dk = 0;
    Eigen::VectorXd zsum = Eigen::VectorXd::Zero(d);
    for (const auto& s : ds.subjects) {
      if (s.v < t) continue;
      const Eigen::VectorXd z = s.z.value(t);
      const double e = std::exp(beta.dot(z));
      s0 += e;
      s1 += e * z;
      s2 += e * z * z.transpose();
      if (s.delta == 1 && s.v == t) {
        ++dk;
        zsum += z;
      }
    }
    val += beta.dot(zsum) - dk * std::log(s0);
    g += zsum - dk * s1 / s0;
    h -= dk * (s2 / s0 - (s1 / s0) * (s1 / s0).transpose());
  }
  if (grad) *grad = g;
  if (hess) *hess = h;
  return val;
}

inline Eigen::VectorXd cox_newton(const Dataset& ds, int d) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    cox_partial(ds, beta, &g, &h);
    const Eigen::VectorXd step = (-h).ldlt().solve(g);
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return beta;
}

// Breslow estimator of the baseline cumulative hazard jumps at the event times.
inline std::vector<double> breslow(const Dataset& ds, const Eigen::VectorXd& beta) {
  std::vector<double> out;
  for (double t : events_of(ds)) {
    double s0 = 0.0;
    int dk = 0;
    for (const auto& s : ds.subjects) {
      if (s.v < t) continue;
      s0 += std::exp(beta.dot(s.z.value(t)));
      if (s.delta == 1 && s.v == t) ++dk;
    }
    out.push_back(dk / s0);
  }
  return out;
}

// Direct summation of the modified log-likelihood with a jump grid given by
// psi.A. Time-dependent covariates handled by evaluating the path at each jump.
inline double direct_loglik(const transcp::TransformFamily& fam, const transcp::RegularParams& psi, double zeta,
                            const Dataset& ds) {
  const double n = static_cast<double>(ds.n());
  const int q = ds.q;
  double total = 0.0;
  for (const auto& s : ds.subjects) {
    const bool up = s.y > zeta;
    auto r = [&](double t) {
      const Eigen::VectorXd z = s.z.value(t);
      double v = psi.beta.dot(z);
      if (up) v += psi.alpha + psi.eta.dot(z.tail(q));
      return v;
    };
    double H = 0.0;
    double jump_at_v = 0.0;
    for (std::size_t k = 0; k < psi.A.times.size(); ++k) {
      if (psi.A.times[k] > s.v) break;
      H += std::exp(r(psi.A.times[k])) * psi.A.jumps[k];
      if (psi.A.times[k] == s.v) jump_at_v = psi.A.jumps[k];
    }
    const auto gd = transcp::g_derivs(fam, H);
    if (s.delta == 1) {
      if (jump_at_v <= 0.0) return -std::numeric_limits<double>::infinity();
      total += std::log(n * jump_at_v) + std::log(gd.dg) + r(s.v);
    }
    total -= gd.g;
  }
  return total / n;
}

// Nelder-Mead minimizer with restarts from the last best point.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                   double scale, int restarts = 8, int max_iter = 20000, double ftol = 1e-15) {
  const int m = static_cast<int>(x0.size());
  for (int rs = 0; rs < restarts; ++rs) {
    std::vector<Eigen::VectorXd> simplex{x0};
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd x = x0;
      x[j] += scale;
      simplex.push_back(x);
    }
    std::vector<double> fv;
    for (const auto& x : simplex) fv.push_back(f(x));
    for (int it = 0; it < max_iter; ++it) {
      std::vector<int> order(m + 1);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
      std::vector<Eigen::VectorXd> s2;
      std::vector<double> f2;
      for (int i : order) {
        s2.push_back(simplex[i]);
        f2.push_back(fv[i]);
      }
      simplex = s2;
      fv = f2;
      if (std::abs(fv[m] - fv[0]) < ftol) break;
      Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
      for (int i = 0; i < m; ++i) c += simplex[i];
      c /= m;
      const Eigen::VectorXd xr = c + (c - simplex[m]);
      const double fr = f(xr);
      if (fr < fv[0]) {
        const Eigen::VectorXd xe = c + 2.0 * (c - simplex[m]);
        const double fe = f(xe);
        if (fe < fr) {
          simplex[m] = xe;
          fv[m] = fe;
        } else {
          simplex[m] = xr;
          fv[m] = fr;
        }
      } else if (fr < fv[m - 1]) {
        simplex[m] = xr;
        fv[m] = fr;
      } else {
        const Eigen::VectorXd xc = fr < fv[m] ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (simplex[m] - c));
        const double fc = f(xc);
        if (fc < std::min(fr, fv[m])) {
          simplex[m] = xc;
          fv[m] = fc;
        } else {
          for (int i = 1; i <= m; ++i) {
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
            fv[i] = f(simplex[i]);
          }
        }
      }
    }
    x0 = simplex[static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin())];
    scale *= 0.5;
  }
  return x0;
}

// (v, delta, y, z): one censored subject and tied event times.
inline Dataset six_subjects() {
  const double rows[6][4] = {{1.2, 0, 0.1, 0.2},  {0.5, 1, 1.0, -2.5}, {0.5, 1, 0.2, -0.2},
                             {0.8, 1, -0.2, -0.9}, {0.8, 1, -0.7, 0.1}, {1.1, 1, 0.3, 0.7}};
  Dataset ds;
  ds.p = 0;
  ds.q = 1;
  for (int i = 0; i < 6; ++i) {
    Subject s;
    s.id = std::to_string(i + 1);
    s.v = rows[i][0];
    s.delta = static_cast<int>(rows[i][1]);
    s.y = rows[i][2];
    s.z = CovariatePath(Eigen::VectorXd::Constant(1, rows[i][3]));
    ds.subjects.push_back(s);
  }
  ds.tau = 1.2;
  return ds;
}

struct Brute {
  double loglik;
  Eigen::VectorXd gamma;
};

// Derivative-free maximization of the log-likelihood over (alpha, eta, beta, log dA_k).
inline Brute brute_force(const transcp::TransformFamily& fam, const Dataset& ds, double zeta) {
  const auto times = events_of(ds);
  const int K = static_cast<int>(times.size());
  auto unpack = [&](const Eigen::VectorXd& x) {
    transcp::RegularParams psi = transcp::RegularParams::zeros(1, 1);
    psi.set_gamma(x.head(3));
    psi.A.times = times;
    for (int k = 0; k < K; ++k) psi.A.jumps.push_back(std::exp(x[3 + k]));
    return psi;
  };
  auto f = [&](const Eigen::VectorXd& x) { return -direct_loglik(fam, unpack(x), zeta, ds); };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3 + K);
  x0.tail(K).setConstant(std::log(1.0 / static_cast<double>(ds.n())));
  const Eigen::VectorXd x = nelder_mead(f, x0, 0.5, 12, 40000);
  return {-f(x), x.head(3)};
}

}  // namespace testsupport
