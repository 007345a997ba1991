#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "transcp/data.hpp"
#include "transcp/families.hpp"

namespace transcp {

// Group assignment per subject: 1 when the subject sits above the threshold.
using GroupMask = std::vector<char>;

GroupMask groups_above(const Dataset& ds, double zeta);
GroupMask all_groups(const Dataset& ds, char value);

// Information in the Euclidean directions and the jump directions
// h4 = 1{u = t_k} (relative perturbations dA_k -> (1 + s) dA_k).
struct InfoBlocks {
  Eigen::MatrixXd gg;   // P x P
  Eigen::MatrixXd ga;   // P x K
  Eigen::MatrixXd aa;   // K x K (diagonal when aa_is_diagonal)
  bool aa_is_diagonal = false;
};

// Per-subject quantities at one parameter point.
struct SubjectTerms {
  Eigen::VectorXd H;     // H(V)
  Eigen::VectorXd xi0;   // G'(H) - delta G''(H)/G'(H)
  Eigen::VectorXd xi1;   // d xi0 / dH
  Eigen::VectorXd ell;   // l_j^psi for the subject's group
  Eigen::VectorXd rv;    // linear predictor at V
  Eigen::MatrixXd rx;    // n x P, R(x) with x = (1{up}, 1{up} Z2, Z)
};

// A dataset laid out against a fixed grid of jump times. The layout is shared
// and immutable; each Model carries its own subject weights (bootstrap
// multipliers, all one by default). Every reduction runs in subject order.
class Model {
 public:
  Model(const Dataset& ds, TransformFamily fam, std::vector<double> grid);

  Model with_weights(std::vector<double> weights) const;

  const Dataset& dataset() const { return *layout_->ds; }
  const TransformFamily& family() const { return layout_->fam; }
  std::span<const double> grid() const { return layout_->grid; }
  std::span<const double> weights() const { return weights_; }
  int n() const { return static_cast<int>(layout_->ds->n()); }
  int grid_size() const { return static_cast<int>(layout_->grid.size()); }
  int gamma_dim() const { return 1 + layout_->q + layout_->d; }

  // Weighted event counts at each grid time.
  Eigen::VectorXd event_mass() const;

  SubjectTerms terms(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps,
                     bool with_rx) const;

  // Mean of delta log(n dA(V)) + l_j^psi; -inf when an event has no positive jump.
  double loglik(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const;

  Eigen::VectorXd score(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const;

  // Unweighted per-subject Euclidean score contributions (n x P).
  Eigen::MatrixXd score_contributions(const Eigen::VectorXd& gamma, const GroupMask& up,
                                      std::span<const double> jumps) const;

  Eigen::MatrixXd info(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const;

  InfoBlocks info_blocks(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps) const;

  // Score along A_s = int (1 + s 1{u <= t}) dA.
  double score_A_direction(const Eigen::VectorXd& gamma, const GroupMask& up, std::span<const double> jumps,
                           double t) const;

  // n * P_n W(t_k; theta) at every grid time.
  Eigen::VectorXd profile_denominators(const Eigen::VectorXd& gamma, const GroupMask& up,
                                       std::span<const double> jumps) const;

 private:
  struct Layout {
    std::shared_ptr<const Dataset> ds;
    TransformFamily fam;
    std::vector<double> grid;
    int q = 0;
    int d = 0;
    // segment s covers grid indices [seg_begin[s], seg_end[s]) with covariate column seg_z.col(s)
    std::vector<int> seg_offset;  // n + 1
    std::vector<int> seg_begin;
    std::vector<int> seg_end;
    Eigen::MatrixXd seg_z;        // d x S
    Eigen::MatrixXd z_at_v;       // d x n
    std::vector<int> event_index; // grid index of V for events, -1 otherwise
    std::vector<char> event_off_grid;
  };

  Model(std::shared_ptr<const Layout> layout, std::vector<double> weights)
      : layout_(std::move(layout)), weights_(std::move(weights)) {}

  void design(int seg, char up, Eigen::VectorXd& x) const;

  std::shared_ptr<const Layout> layout_;
  std::vector<double> weights_;
};

}  // namespace transcp
