#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bico/common.hpp"

namespace bico {

using Objective = std::function<double(const Vector&)>;

struct OptimResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
};

/// Latin hypercube design: for every dimension the n equal-width bins each hold exactly
/// one point, uniformly placed inside its bin, with an independent random bin permutation
/// per dimension.
std::vector<Vector> lhs_sample(int n, const BoxBounds& box, Rng& rng);

struct NelderMeadOptions {
    int max_evals = 100;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    /// Stop once every vertex is within this fraction of the box width of the best vertex.
    double relative_diameter_tol = 1e-6;
    /// Initial simplex edge as a fraction of the box width.
    double initial_step = 0.1;
};

/// Maximises f over the box with a Nelder-Mead simplex. Proposals outside the box are clipped
/// onto it; non-finite objective values rank as -inf. Returns the best evaluated point.
OptimResult nelder_mead_max(const Objective& f, const BoxBounds& box, const Vector& start,
                            const NelderMeadOptions& opts = {});

/// Runs nelder_mead_max from every seed point and then from n_starts random starts. Start i
/// is drawn from its own engine mix_seed(base, i), with base drawn once from rng, so the first
/// k starts do not depend on n_starts.
OptimResult multistart_max(const Objective& f, const BoxBounds& box, int n_starts, Rng& rng,
                           const std::vector<Vector>& seeds = {},
                           const NelderMeadOptions& opts = {});

/// Index and value of the largest finite f over a discrete set (index -1 if none is finite).
std::pair<int, double> discrete_max(const Objective& f, const std::vector<Vector>& points);

} // namespace bico
