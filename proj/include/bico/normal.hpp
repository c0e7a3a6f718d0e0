#pragma once

#include <cmath>
#include <numbers>

namespace bico::normal {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double pdf(double z)
{
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

inline double cdf(double z)
{
    return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

/// log Phi(z), accurate far into the lower tail.
double log_cdf(double z);

/// Phi^{-1}(p) for p in (0, 1); +-inf at the endpoints.
double quantile(double p);

/// log(Phi(beta) - Phi(alpha)) for alpha <= beta, computed without cancellation in either tail.
double log_interval_mass(double alpha, double beta);

} // namespace bico::normal
