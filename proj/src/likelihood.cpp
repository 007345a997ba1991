#include "transcp/likelihood.hpp"

#include <cmath>

#include "transcp/error.hpp"

namespace transcp {

double r_xi(const Theta& theta, const Subject& subj, double t, int q) {
  const auto& psi = theta.psi;
  const Eigen::VectorXd& z = subj.z.value(t);
  double r = psi.beta.dot(z);
  if (subj.y > theta.zeta) r += psi.alpha + psi.eta.dot(z.tail(q));
  return r;
}

double h_theta(const Theta& theta, const Subject& subj, double t, int q) {
  const auto& A = theta.psi.A;
  const double upto = std::min(t, subj.v);
  double h = 0.0;
  for (std::size_t k = 0; k < A.times.size() && A.times[k] <= upto; ++k) {
    h += std::exp(r_xi(theta, subj, A.times[k], q)) * A.jumps[k];
  }
  return h;
}

namespace {

Model model_for(const TransformFamily& fam, const RegularParams& psi, const Dataset& ds) {
  if (psi.A.times.size() != psi.A.jumps.size()) throw DomainError("cumulative hazard needs one jump per time");
  if (psi.eta.size() != ds.q || psi.beta.size() != ds.d()) {
    throw DomainError("parameter dimensions do not match the dataset");
  }
  for (double j : psi.A.jumps) {
    if (!(j >= 0.0)) throw DomainError("cumulative hazard jumps must be nonnegative");
  }
  return Model(ds, fam, psi.A.times);
}

}  // namespace

double loglik(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds) {
  const Model m = model_for(fam, psi, ds);
  return m.loglik(psi.gamma(), groups_above(ds, zeta), psi.A.jumps);
}

Eigen::VectorXd score_euclidean(const TransformFamily& fam, const RegularParams& psi, double zeta,
                                const Dataset& ds) {
  const Model m = model_for(fam, psi, ds);
  return m.score(psi.gamma(), groups_above(ds, zeta), psi.A.jumps);
}

double score_A_direction(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds,
                         double t) {
  const Model m = model_for(fam, psi, ds);
  return m.score_A_direction(psi.gamma(), groups_above(ds, zeta), psi.A.jumps, t);
}

Eigen::MatrixXd info_euclidean(const TransformFamily& fam, const RegularParams& psi, double zeta,
                               const Dataset& ds) {
  const Model m = model_for(fam, psi, ds);
  return m.info(psi.gamma(), groups_above(ds, zeta), psi.A.jumps);
}

InfoBlocks info_full(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds) {
  const Model m = model_for(fam, psi, ds);
  return m.info_blocks(psi.gamma(), groups_above(ds, zeta), psi.A.jumps);
}

}  // namespace transcp
