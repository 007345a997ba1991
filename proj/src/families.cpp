#include "transcp/families.hpp"

#include <cmath>
#include <charconv>
#include <sstream>

#include "transcp/error.hpp"

namespace transcp {

TransformFamily TransformFamily::cox() { return TransformFamily(Kind::Cox, 0.0); }

TransformFamily TransformFamily::odds_rate(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw DomainError("odds-rate family requires c > 0");
  }
  return TransformFamily(Kind::OddsRate, c);
}

TransformFamily TransformFamily::bent_laplace(double c) {
  if (!(c > 0.5 && c < 1.0)) {
    throw DomainError("bent family requires 1/2 < c < 1");
  }
  return TransformFamily(Kind::BentLaplace, c);
}

TransformFamily TransformFamily::with_cap(double cap) const {
  if (!(cap > 0.0)) throw DomainError("family cap must be positive");
  TransformFamily out = *this;
  out.cap_ = cap;
  return out;
}

namespace {

double parse_param(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw DomainError("bad family parameter in '" + std::string(spec) + "'");
  }
  return value;
}

}  // namespace

TransformFamily TransformFamily::parse(std::string_view spec) {
  if (spec == "cox") return cox();
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw DomainError("unknown family '" + std::string(spec) +
                      "' (expected cox, odds-rate:<c> or bent:<c>)");
  }
  const auto name = spec.substr(0, colon);
  const double c = parse_param(spec.substr(colon + 1), spec);
  if (name == "odds-rate") return odds_rate(c);
  if (name == "bent") return bent_laplace(c);
  throw DomainError("unknown family '" + std::string(spec) + "'");
}

std::string TransformFamily::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Cox:
      return "cox";
    case Kind::OddsRate:
      os << "odds-rate:" << c_;
      return os.str();
    case Kind::BentLaplace:
      os << "bent:" << c_;
      return os.str();
  }
  return "cox";
}

GDerivs g_derivs(const TransformFamily& fam, double u) {
  if (!std::isfinite(u) || u < 0.0) {
    throw DomainError("G is defined on [0, inf); got u = " + std::to_string(u));
  }
  if (u > fam.cap()) {
    throw DomainError("G argument " + std::to_string(u) + " exceeds the family cap");
  }
  const double c = fam.c();
  switch (fam.kind()) {
    case TransformFamily::Kind::Cox:
      return {u, 1.0, 0.0, 0.0};
    case TransformFamily::Kind::OddsRate: {
      const double s = 1.0 + c * u;
      return {std::log1p(c * u) / c, 1.0 / s, -c / (s * s), 2.0 * c * c / (s * s * s)};
    }
    case TransformFamily::Kind::BentLaplace: {
      const double q = 1.0 + 2.0 * c * u + u * u;
      const double dq = 2.0 * (c + u);
      const double g1 = dq / q;
      const double g2 = 2.0 / q - g1 * g1;
      const double g3 = -6.0 * dq / (q * q) + 2.0 * g1 * g1 * g1;
      return {std::log(q), g1, g2, g3};
    }
  }
  return {u, 1.0, 0.0, 0.0};
}

double lambda_eval(const TransformFamily& fam, double u) {
  return std::exp(-g_derivs(fam, u).g);
}

double lambda_inv(const TransformFamily& fam, double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw DomainError("Lambda^{-1} needs p in (0, 1]");
  }
  const double c = fam.c();
  switch (fam.kind()) {
    case TransformFamily::Kind::Cox:
      return -std::log(p);
    case TransformFamily::Kind::OddsRate:
      return std::expm1(-c * std::log(p)) / c;
    case TransformFamily::Kind::BentLaplace:
      // root of u^2 + 2 c u + 1 - 1/p = 0; (1 - p)/p keeps precision near p = 1
      return -c + std::sqrt(c * c + (1.0 - p) / p);
  }
  return -std::log(p);
}

}  // namespace transcp
