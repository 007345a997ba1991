#pragma once

#include <Eigen/Dense>

#include "transcp/data.hpp"
#include "transcp/families.hpp"
#include "transcp/model.hpp"
#include "transcp/params.hpp"

namespace transcp {

// beta'Z(t) + (alpha + eta'Z2(t)) 1{Y > zeta}
double r_xi(const Theta& theta, const Subject& subj, double t, int q);

// H^theta(t) = sum over jump times s <= min(t, V) of exp(r_xi(s)) dA(s).
double h_theta(const Theta& theta, const Subject& subj, double t, int q);

// Modified nonparametric log-likelihood (a(u) replaced by n dA(u)), averaged
// over subjects. Returns -inf when an uncensored time carries no jump.
double loglik(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds);

// Directional derivatives of loglik in (alpha; eta; beta).
Eigen::VectorXd score_euclidean(const TransformFamily& fam, const RegularParams& psi, double zeta,
                                const Dataset& ds);

// Derivative of loglik along A_s = int (1 + s 1{u <= t}) dA at s = 0.
double score_A_direction(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds,
                         double t);

// Negative Hessian of loglik in (alpha; eta; beta) at fixed A.
Eigen::MatrixXd info_euclidean(const TransformFamily& fam, const RegularParams& psi, double zeta,
                               const Dataset& ds);

// Euclidean block together with the jump-direction projections of the
// information operator.
InfoBlocks info_full(const TransformFamily& fam, const RegularParams& psi, double zeta, const Dataset& ds);

}  // namespace transcp
