#pragma once

#include <span>
#include <vector>

namespace transcp {

// Linear-interpolation sample quantile (Hyndman-Fan type 7).
double quantile(std::span<const double> values, double prob);

// Inverse empirical CDF (type 1): the smallest order statistic x with F_n(x) >= prob.
double order_statistic_quantile(std::span<const double> values, double prob);

double mean(std::span<const double> values);

// Sample standard deviation, divisor n - 1.
double sample_sd(std::span<const double> values);


// Standard normal quantile.
double normal_quantile(double p);

}  // namespace transcp
