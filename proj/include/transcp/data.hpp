#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace transcp {

// Left-continuous step path: value(t) = values[k] for t in (breakpoints[k], breakpoints[k+1]],
// and value(0) = values[0]. The last piece is carried forward.
class CovariatePath {
 public:
  CovariatePath() = default;
  explicit CovariatePath(Eigen::VectorXd constant);
  CovariatePath(std::vector<double> breakpoints, std::vector<Eigen::VectorXd> values);

  const Eigen::VectorXd& value(double t) const { return values_[piece(t)]; }
  std::size_t piece(double t) const;

  std::size_t dim() const { return values_.empty() ? 0 : static_cast<std::size_t>(values_[0].size()); }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<Eigen::VectorXd>& values() const { return values_; }
  bool is_constant() const { return values_.size() == 1; }

  // Sum of piece-to-piece jumps (L1) over breakpoints inside [0, horizon].
  double total_variation(double horizon) const;

  friend bool operator==(const CovariatePath& lhs, const CovariatePath& rhs);

 private:
  std::vector<double> breakpoints_;
  std::vector<Eigen::VectorXd> values_;
};

struct Subject {
  std::string id;
  double v = 0.0;   // event or censoring time
  int delta = 0;    // 1 = event observed
  double y = 0.0;   // threshold covariate
  CovariatePath z;  // d = p + q components; the last q form Z2

  friend bool operator==(const Subject&, const Subject&) = default;
};

struct Dataset {
  std::vector<Subject> subjects;
  double tau = 0.0;
  int p = 0;
  int q = 1;

  std::size_t n() const { return subjects.size(); }
  int d() const { return p + q; }

  // Checks the structural invariants; throws DomainError.
  void check() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct LoadOptions {
  // Number of trailing covariates interacting with the threshold; defaults to all of them.
  std::optional<int> q;
  // Study horizon; defaults to the largest observed time.
  std::optional<double> tau;
};

// Subjects table: id,time,status,y,z1..zd. Optional long-format covariate
// table: id,start,z1..zd, one row per step change.
Dataset load_dataset(std::istream& subjects, std::istream* covariates = nullptr,
                     const LoadOptions& opts = {});
Dataset load_dataset_files(const std::string& subjects_path,
                           const std::optional<std::string>& covariates_path = std::nullopt,
                           const LoadOptions& opts = {});

// Writes the subjects table; step changes after time 0 go to the covariate table
// when one is given. Values are printed with round-trip precision.
void write_dataset(const Dataset& ds, std::ostream& subjects, std::ostream* covariates = nullptr);

struct ValidationReport {
  std::vector<std::string> warnings;
  std::vector<double> path_total_variation;
  std::size_t below_a = 0;
  std::size_t above_b = 0;
  std::size_t events = 0;

  bool ok() const { return warnings.empty(); }
};

ValidationReport validate(const Dataset& ds, double a, double b);

// Sorted distinct uncensored times.
std::vector<double> event_grid(const Dataset& ds);

// Default threshold range: the empirical 10th and 90th percentiles of Y,
// taken as order statistics (inverse empirical CDF).
std::pair<double, double> default_threshold_range(const Dataset& ds, double inner_frac = 0.8);

}  // namespace transcp
