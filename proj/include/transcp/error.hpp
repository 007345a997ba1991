#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace transcp {

// Invalid argument outside an operation's domain (negative u, p outside (0,1], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input files; the message names the offending row.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: nonpositive weights, G' <= 0, singular matrices.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative routine hit its iteration cap.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, int iterations, double residual,
                      std::vector<double> last_iterate = {})
      : std::runtime_error(what), iterations_(iterations), residual_(residual),
        last_iterate_(std::move(last_iterate)) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  int iterations_;
  double residual_;
  std::vector<double> last_iterate_;
};

}  // namespace transcp
