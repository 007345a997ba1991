#include <random>

#include "doctest.h"
#include "support.hpp"
#include "transcp/likelihood.hpp"
#include "transcp/model.hpp"

using namespace transcp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Subject subject(double v, int delta, double y, Eigen::VectorXd z) {
  Subject s;
  s.v = v;
  s.delta = delta;
  s.y = y;
  s.z = CovariatePath(std::move(z));
  return s;
}

Dataset single(const Subject& s) {
  Dataset ds;
  ds.p = 0;
  ds.q = 1;
  ds.subjects = {s};
  ds.tau = s.v;
  return ds;
}

RegularParams params(double alpha, double eta, double beta, std::vector<double> times, std::vector<double> jumps) {
  RegularParams psi = RegularParams::zeros(1, 1);
  psi.alpha = alpha;
  psi.eta[0] = eta;
  psi.beta[0] = beta;
  psi.A.times = std::move(times);
  psi.A.jumps = std::move(jumps);
  return psi;
}

struct Point {
  TransformFamily fam;
  Dataset ds;
  RegularParams psi;
  double zeta;
};

// Random dataset with step covariates (d = 2, q = 1), random gamma and jumps.
Point random_point(const TransformFamily& fam, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nrm;
  std::uniform_real_distribution<double> unif(0.05, 0.4);
  Dataset ds = testsupport::random_dataset(
      15, 1, 1, seed, [](const Eigen::VectorXd& z, double y) { return 0.4 * z[0] + (y > 0 ? -0.5 : 0.0); }, 3.0,
      true);
  RegularParams psi = RegularParams::zeros(1, 2);
  Eigen::VectorXd g(4);
  for (int j = 0; j < 4; ++j) g[j] = 0.5 * nrm(rng);
  psi.set_gamma(g);
  psi.A.times = event_grid(ds);
  for (std::size_t k = 0; k < psi.A.times.size(); ++k) psi.A.jumps.push_back(unif(rng));
  std::vector<double> ys;
  for (const auto& s : ds.subjects) ys.push_back(s.y);
  std::sort(ys.begin(), ys.end());
  const double zeta = ys[3 + seed % 8];
  return {fam, ds, psi, zeta};
}

double rel_err(double analytic, double fd) { return std::abs(analytic - fd) / std::max(std::abs(fd), 1e-3); }

const TransformFamily kFamilies[] = {TransformFamily::cox(), TransformFamily::odds_rate(1.0),
                                     TransformFamily::odds_rate(0.4), TransformFamily::bent_laplace(0.75)};

}  // namespace

TEST_CASE("linear predictor and cumulative intensity") {
  Theta th;
  th.psi = params(0.5, 0.2, 1.0, {1.0}, {0.5});
  th.zeta = 0.0;
  CHECK(r_xi(th, subject(3.0, 1, 1.0, vec({2.0})), 1.0, 1) == doctest::Approx(2.9).epsilon(1e-15));
  CHECK(r_xi(th, subject(3.0, 1, -1.0, vec({2.0})), 1.0, 1) == doctest::Approx(2.0).epsilon(1e-15));

  Subject step = subject(5.0, 1, -1.0, vec({0.0}));
  step.z = CovariatePath({0.0, 2.0}, {vec({1.0}), vec({3.0})});
  CHECK(r_xi(th, step, 2.0, 1) == 1.0);

  th.psi = params(0.0, 0.0, 0.0, {1.0}, {0.5});
  CHECK(h_theta(th, subject(3.0, 1, 0.0, vec({0.0})), 2.0, 1) == 0.5);
  th.psi.beta[0] = std::log(2.0);
  CHECK(h_theta(th, subject(3.0, 1, 0.0, vec({1.0})), 2.0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h_theta(th, subject(0.5, 1, 0.0, vec({1.0})), 2.0, 1) == 0.0);
}

TEST_CASE("single-subject log-likelihood values") {
  const auto cox = TransformFamily::cox();
  const Dataset censored = single(subject(1.0, 0, 0.0, vec({0.0})));
  CHECK(loglik(cox, params(0, 0, 0, {0.5}, {0.3}), 0.0, censored) == doctest::Approx(-0.3).epsilon(1e-15));
  const Dataset event = single(subject(1.0, 1, 0.0, vec({0.0})));
  CHECK(loglik(cox, params(0, 0, 0, {1.0}, {0.2}), 0.0, event) ==
        doctest::Approx(std::log(0.2) - 0.2).epsilon(1e-15));
  CHECK(loglik(cox, params(0, 0, 0, {1.0}, {0.0}), 0.0, event) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("three-subject odds-rate log-likelihood matches direct summation") {
  Dataset ds;
  ds.p = 0;
  ds.q = 1;
  ds.subjects = {subject(1.0, 1, 0.5, vec({0.3})), subject(2.0, 0, -0.2, vec({-1.1})),
                 subject(2.5, 1, 1.4, vec({0.8}))};
  ds.tau = 2.5;
  const auto po = TransformFamily::odds_rate(1.0);
  const RegularParams psi = params(0.4, -0.7, 0.9, {1.0, 2.5}, {0.3, 0.6});
  for (double zeta : {-1.0, 0.0, 1.0}) {
    CHECK(loglik(po, psi, zeta, ds) == doctest::Approx(testsupport::direct_loglik(po, psi, zeta, ds)).epsilon(1e-12));
  }
}

TEST_CASE("log-likelihood matches direct summation with step covariates") {
  for (const auto& fam : kFamilies) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const Point pt = random_point(fam, seed);
      CHECK(loglik(fam, pt.psi, pt.zeta, pt.ds) ==
            doctest::Approx(testsupport::direct_loglik(fam, pt.psi, pt.zeta, pt.ds)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero hazard gives zero score and information") {
  Dataset ds = testsupport::random_dataset(10, 0, 1, 2, [](const Eigen::VectorXd&, double) { return 0.0; });
  for (auto& s : ds.subjects) s.delta = 0;
  RegularParams psi = params(0.3, 0.1, -0.2, {}, {});
  const auto po = TransformFamily::odds_rate(1.0);
  CHECK(score_euclidean(po, psi, 0.0, ds).isZero(0.0));
  CHECK(info_euclidean(po, psi, 0.0, ds).isZero(0.0));
}

TEST_CASE("score and information agree with finite differences at random points") {
  const double h = 1e-5;
  for (const auto& fam : kFamilies) {
    for (unsigned seed = 100; seed < 120; ++seed) {
      const Point pt = random_point(fam, seed);
      const Eigen::VectorXd g0 = pt.psi.gamma();
      const Eigen::VectorXd score = score_euclidean(fam, pt.psi, pt.zeta, pt.ds);
      const Eigen::MatrixXd info = info_euclidean(fam, pt.psi, pt.zeta, pt.ds);
      CHECK((info - info.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
      for (int j = 0; j < g0.size(); ++j) {
        RegularParams plus = pt.psi;
        RegularParams minus = pt.psi;
        Eigen::VectorXd gp = g0;
        Eigen::VectorXd gm = g0;
        gp[j] += h;
        gm[j] -= h;
        plus.set_gamma(gp);
        minus.set_gamma(gm);
        const double fd = (loglik(fam, plus, pt.zeta, pt.ds) - loglik(fam, minus, pt.zeta, pt.ds)) / (2 * h);
        CHECK(rel_err(score[j], fd) < 1e-6);
        const Eigen::VectorXd dscore =
            (score_euclidean(fam, plus, pt.zeta, pt.ds) - score_euclidean(fam, minus, pt.zeta, pt.ds)) / (2 * h);
        for (int l = 0; l < g0.size(); ++l) CHECK(rel_err(info(l, j), -dscore[l]) < 1e-4);
      }
      for (std::size_t k = 0; k < pt.psi.A.times.size(); k += 3) {
        const double t = pt.psi.A.times[k];
        auto along = [&](double s) {
          RegularParams p = pt.psi;
          for (std::size_t m = 0; m <= k; ++m) p.A.jumps[m] *= 1.0 + s;
          return loglik(fam, p, pt.zeta, pt.ds);
        };
        const double fd = (along(h) - along(-h)) / (2 * h);
        CHECK(rel_err(score_A_direction(fam, pt.psi, pt.zeta, pt.ds, t), fd) < 1e-6);
      }
      CHECK(score_A_direction(fam, pt.psi, pt.zeta, pt.ds, 0.0) == 0.0);
    }
  }
}

TEST_CASE("jump-direction information blocks agree with finite differences in log-jump coordinates") {
  const double h = 1e-5;
  for (const auto& fam : kFamilies) {
    for (unsigned seed = 200; seed < 205; ++seed) {
      const Point pt = random_point(fam, seed);
      const InfoBlocks blocks = info_full(fam, pt.psi, pt.zeta, pt.ds);
      const int K = static_cast<int>(pt.psi.A.times.size());
      REQUIRE(blocks.ga.cols() == K);
      CHECK(blocks.aa_is_diagonal == fam.is_cox());
      // jump score k = score along 1{u = t_k}
      auto jump_scores = [&](const RegularParams& p) {
        Eigen::VectorXd out(K);
        double prev = 0.0;
        for (int k = 0; k < K; ++k) {
          const double cur = score_A_direction(fam, p, pt.zeta, pt.ds, p.A.times[static_cast<std::size_t>(k)]);
          out[k] = cur - prev;
          prev = cur;
        }
        return out;
      };
      for (int k = 0; k < K; ++k) {
        RegularParams plus = pt.psi;
        RegularParams minus = pt.psi;
        plus.A.jumps[static_cast<std::size_t>(k)] *= 1.0 + h;
        minus.A.jumps[static_cast<std::size_t>(k)] *= 1.0 - h;
        const Eigen::VectorXd dg =
            (score_euclidean(fam, plus, pt.zeta, pt.ds) - score_euclidean(fam, minus, pt.zeta, pt.ds)) / (2 * h);
        for (int j = 0; j < dg.size(); ++j) CHECK(rel_err(blocks.ga(j, k), -dg[j]) < 1e-4);
        const Eigen::VectorXd da = (jump_scores(plus) - jump_scores(minus)) / (2 * h);
        for (int l = 0; l < K; ++l) CHECK(std::abs(blocks.aa(l, k) + da[l]) < 1e-8 + 1e-4 * std::abs(da[l]));
      }
    }
  }
}

TEST_CASE("cox has Xi0 = 1 and Xi1 = 0; other families keep Xi0 positive") {
  for (const auto& fam : kFamilies) {
    for (unsigned seed = 300; seed < 305; ++seed) {
      const Point pt = random_point(fam, seed);
      const Model model(pt.ds, fam, pt.psi.A.times);
      const SubjectTerms t = model.terms(pt.psi.gamma(), groups_above(pt.ds, pt.zeta), pt.psi.A.jumps, false);
      if (fam.is_cox()) {
        CHECK((t.xi0.array() == 1.0).all());
        CHECK((t.xi1.array() == 0.0).all());
      } else if (fam.kind() == TransformFamily::Kind::OddsRate) {
        CHECK((t.xi0.array() > 0.0).all());
      }
    }
  }
}

TEST_CASE("log-likelihood is invariant to subject order and constant between order statistics") {
  const auto po = TransformFamily::odds_rate(1.0);
  const Point pt = random_point(po, 7);
  Dataset shuffled = pt.ds;
  std::reverse(shuffled.subjects.begin(), shuffled.subjects.end());
  std::swap(shuffled.subjects[2], shuffled.subjects[9]);
  CHECK(loglik(po, pt.psi, pt.zeta, pt.ds) == doctest::Approx(loglik(po, pt.psi, pt.zeta, shuffled)).epsilon(1e-14));

  std::vector<double> ys;
  for (const auto& s : pt.ds.subjects) ys.push_back(s.y);
  std::sort(ys.begin(), ys.end());
  const double lo = ys[5];
  const double hi = ys[6];
  CHECK(loglik(po, pt.psi, lo, pt.ds) == loglik(po, pt.psi, lo + 0.3 * (hi - lo), pt.ds));
  CHECK(loglik(po, pt.psi, lo, pt.ds) == loglik(po, pt.psi, lo + 0.99 * (hi - lo), pt.ds));
}
