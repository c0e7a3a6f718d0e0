#include "bico/normal.hpp"

#include <limits>

#include <boost/math/special_functions/erf.hpp>

namespace bico::normal {

double log_cdf(double z)
{
    if (z > -20.0) {
        return std::log(cdf(z));
    }
    // Asymptotic series of the Mills ratio.
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double quantile(double p)
{
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_interval_mass(double alpha, double beta)
{
    if (beta <= alpha) return -std::numeric_limits<double>::infinity();
    // Work in whichever tail keeps both masses away from 1.
    if (alpha > 0.0) {
        std::swap(alpha, beta);
        alpha = -alpha;
        beta = -beta;
    }
    // Now alpha <= 0 side dominates: mass = Phi(beta) - Phi(alpha).
    const double lb = log_cdf(beta);
    const double la = log_cdf(alpha);
    if (la == -std::numeric_limits<double>::infinity()) return lb;
    return lb + std::log1p(-std::exp(la - lb));
}

} // namespace bico::normal
