#pragma once

#include <string>
#include <string_view>

namespace transcp {

// Known transformation Lambda(u) = exp(-G(u)) of the linear transformation
// model S(t | Z, Y) = Lambda(int_0^t e^{r(s)} dA(s)).
//
//   Cox            G(u) = u
//   OddsRate(c)    G(u) = log(1 + c u) / c          (c = 1: proportional odds)
//   BentLaplace(c) G(u) = log(1 + 2 c u + u^2),     1/2 < c < 1
class TransformFamily {
 public:
  enum class Kind { Cox, OddsRate, BentLaplace };

  static TransformFamily cox();
  static TransformFamily odds_rate(double c);
  static TransformFamily bent_laplace(double c);

  // "cox", "odds-rate:<c>", "bent:<c>"
  static TransformFamily parse(std::string_view spec);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  bool is_cox() const noexcept { return kind_ == Kind::Cox; }

  // Arguments above the cap are rejected instead of overflowing.
  double cap() const noexcept { return cap_; }
  TransformFamily with_cap(double cap) const;

  friend bool operator==(const TransformFamily&, const TransformFamily&) = default;

 private:
  TransformFamily(Kind kind, double c) : kind_(kind), c_(c) {}

  Kind kind_;
  double c_;
  double cap_ = 1e12;
};

struct GDerivs {
  double g;
  double dg;
  double ddg;
  double dddg;
};

// G and its first three derivatives at u >= 0.
GDerivs g_derivs(const TransformFamily& fam, double u);

// Lambda(u) = exp(-G(u)).
double lambda_eval(const TransformFamily& fam, double u);

// Inverse of Lambda on (0, 1].
double lambda_inv(const TransformFamily& fam, double p);

}  // namespace transcp
