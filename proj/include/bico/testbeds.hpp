#pragma once

#include <cstdint>
#include <utility>

#include "bico/common.hpp"
#include "bico/gp_surrogate.hpp"
#include "bico/parameter_posterior.hpp"
#include "bico/problem.hpp"

namespace bico {

// --- Newsvendor ------------------------------------------------------------------------------
// Order x papers, demand C ~ N(a, demand_var), profit price * min(x, C) - cost * x.

struct NewsvendorConfig {
    double price = 5.0;
    double cost = 3.0;
    double demand_var = 10.0;
    double true_mean = 40.0;
    BoxBounds x_bounds = BoxBounds{{0.0, 100.0}};
    BoxBounds a_bounds = BoxBounds{{0.0, 100.0}};

    /// Throws ConfigError unless price > cost > 0 and demand_var > 0.
    void validate() const;
};

double newsvendor_simulate(double x, double a, const NewsvendorConfig& cfg, Rng& rng);
/// Expected profit, using E[min(x, C)] = a - s phi(d) - (a - x) Phi(d), d = (a - x) / s.
double newsvendor_theta(double x, double a, const NewsvendorConfig& cfg);
/// Critical-ratio optimum: x* = mu* + s Phi^{-1}((price - cost) / price).
std::pair<double, double> newsvendor_xstar(const NewsvendorConfig& cfg);

/// One source observing the demand mean with noise variance source_noise_var.
Problem make_newsvendor_problem(const NewsvendorConfig& cfg, double source_noise_var, double source_cost);

// --- GP-generated test functions -------------------------------------------------------------

/// A fixed sample path of a GP prior: theta(p) = k(p, anchors) alpha with alpha ~ N(0, (K + dI)^-1),
/// so the anchor values K alpha have covariance ~K and theta interpolates them exactly.
class GpTestFunction {
public:
    GpTestFunction(BoxBounds x_box, BoxBounds a_box, GpHyperparams hyper, Matrix anchors, Vector alpha,
                   bool depends_on_a = true);

    [[nodiscard]] double theta(const Vector& x, const Vector& a) const;
    [[nodiscard]] double theta(const Vector& joined) const;
    /// theta plus N(0, noise_var) observation noise.
    [[nodiscard]] double simulate(const Vector& x, const Vector& a, Rng& rng) const;

    [[nodiscard]] const BoxBounds& x_box() const { return x_box_; }
    [[nodiscard]] const BoxBounds& a_box() const { return a_box_; }
    [[nodiscard]] const GpHyperparams& hyper() const { return hyper_; }
    [[nodiscard]] const Matrix& anchors() const { return anchors_; }
    [[nodiscard]] const Vector& anchor_values() const { return anchor_values_; }
    [[nodiscard]] bool depends_on_a() const { return depends_on_a_; }

private:
    /// Reads only the leading anchors_.cols() coordinates of p.
    [[nodiscard]] double interpolate(const Vector& p) const;

    BoxBounds x_box_;
    BoxBounds a_box_;
    GpHyperparams hyper_;
    Matrix anchors_;
    Vector alpha_;
    Vector anchor_values_;
    bool depends_on_a_ = true;
};

struct GpTestInstance {
    GpTestFunction fn;
    TruthOracle truth;
};

/// Builds the function from `seed` alone: anchors by LHS over X x A, then alpha, then a* uniform
/// on A, then x* by grid search and polish. With depends_on_a = false the anchors span X only
/// and theta ignores a (hyper then needs one lengthscale or one per x dimension).
GpTestInstance gp_testfunc_build(std::uint64_t seed, const GpHyperparams& hyper, int n_anchor,
                                 const BoxBounds& x_box, const BoxBounds& a_box, bool depends_on_a = true);

/// One source per parameter coordinate with the given noise variance and cost.
Problem make_gp_problem(const GpTestInstance& inst, double source_noise_var, double source_cost);

/// r ~ N(a*[target_dim], obs_noise_var).
double source_simulate(const SourceSpec& spec, const Vector& a_star, Rng& rng);

} // namespace bico
