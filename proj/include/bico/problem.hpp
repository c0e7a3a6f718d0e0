#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bico/common.hpp"
#include "bico/parameter_posterior.hpp"

namespace bico {

/// Ground truth for scoring recommendations. Immutable after construction.
struct TruthOracle {
    Vector a_star;
    std::function<double(const Vector& x, const Vector& a)> theta;
    Vector x_star;
    double theta_star = 0.0;

    [[nodiscard]] double theta_true(const Vector& x) const { return theta(x, a_star); }
};

/// Locates x* = argmax_x theta(x, a*) on a grid of about 10^4 points plus a Nelder-Mead polish
/// from the best grid point. A `hint` (e.g. an analytic optimum) is kept when the grid does not
/// beat it by more than 1e-9; otherwise NumericError is thrown.
TruthOracle make_truth_oracle(std::function<double(const Vector&, const Vector&)> theta, Vector a_star,
                              const BoxBounds& x_box, const std::optional<Vector>& hint = std::nullopt);

/// theta(x*, a*) - theta(x_r, a*).
double opportunity_cost(const Vector& x_r, const TruthOracle& oracle);

using Simulator = std::function<double(const JointPoint&, Rng&)>;
using SourceQuery = std::function<double(int source, Rng&)>;

/// Everything the optimisation loop sees of a problem instance.
struct Problem {
    BoxBounds x_box;
    BoxBounds a_box;
    Simulator simulate;
    std::vector<SourceSpec> sources;
    SourceQuery query;
    /// Used only for logging opportunity costs, never for decisions.
    std::optional<TruthOracle> truth;
};

} // namespace bico
