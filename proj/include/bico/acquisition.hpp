#pragma once

#include <optional>
#include <vector>

#include "bico/common.hpp"
#include "bico/gp_surrogate.hpp"
#include "bico/inner_optim.hpp"
#include "bico/parameter_posterior.hpp"

namespace bico {

/// Solution grid plus posterior parameter samples, frozen for one iteration and shared by the
/// simulation and source value computations.
struct DiscretizationSet {
    std::vector<Vector> x_grid;
    std::vector<Vector> a_samples;
};

DiscretizationSet make_discretization(const BoxBounds& x_box, int grid_size,
                                      const ParameterPosterior& post, int n_a_samples, Rng& rng);

struct AcquisitionOptions {
    int n_a_samples = 100;
    /// Grid size is grid_per_dim * D.
    int grid_per_dim = 100;
    int n_r = 30;
    int restarts = 10;
    int max_evals = 100;
    int recommend_restarts = 2;
};

struct VoiEstimate {
    double value = 0.0;   // per unit cost
    double std_err = 0.0; // Monte-Carlo standard error, 0 for analytic values
    std::optional<JointPoint> point;
    std::optional<int> source;
    /// Draws skipped because every importance weight vanished.
    int degenerate_draws = 0;
};

/// (1/N_A) sum_i mu^n(x, a_i).
double predicted_performance(const Vector& x, const GpPosterior& g, const DiscretizationSet& disc);

/// E_Z[max_i(means_i + slopes_i Z)] - max_i means_i, Z ~ N(0, 1), from the upper envelope of
/// the lines. Slopes within 1e-12 count as tied; the larger intercept wins.
double kg_discrete(const Vector& means, const Vector& slopes);

/// Lines of the one-step look-ahead for a simulation at `next`: for every x in the grid plus
/// next.x, the predicted performance and the posterior-averaged sigma-tilde coefficient.
struct KgLines {
    std::vector<Vector> xs;
    Vector means;
    Vector slopes;
};
KgLines simulation_lines(const JointPoint& next, const GpPosterior& g, const DiscretizationSet& disc);

VoiEstimate voi_simulation(const JointPoint& next, const GpPosterior& g, const DiscretizationSet& disc,
                           double sim_cost);

/// Cached view of a fitted GP restricted to one discretisation. The squared-exponential kernel
/// factorises into x and a parts, so posterior means and sigma-tilde coefficients averaged over
/// the parameter samples reduce to small matrix products. Agrees with the direct routes up to
/// rounding.
class DiscreteModel {
public:
    DiscreteModel(const GpPosterior& g, const DiscretizationSet& disc);

    [[nodiscard]] const GpPosterior& gp() const { return *gp_; }
    [[nodiscard]] const DiscretizationSet& disc() const { return *disc_; }

    /// Predicted performance at every grid point.
    [[nodiscard]] const Vector& grid_performance() const { return grid_g_; }
    /// Predicted performance at an arbitrary x.
    [[nodiscard]] double performance(const Vector& x) const;
    /// mu^n(x_g, a_j) for grid row g and sample column j.
    [[nodiscard]] const Matrix& mean_matrix() const { return mu_; }
    /// Index of the best grid point.
    [[nodiscard]] int best_grid_index() const;

    /// Value of a simulation at `next` per unit cost; same quantity as voi_simulation.
    [[nodiscard]] double simulation_value(const JointPoint& next, double sim_cost) const;

private:
    [[nodiscard]] Vector x_part(const Vector& x) const; // unit-signal kernel vs training x's
    [[nodiscard]] double a_part_mean(const Vector& a) const;

    const GpPosterior* gp_;
    const DiscretizationSet* disc_;
    Vector x_len_;
    Vector a_len_;
    Vector ea_mean_; // mean_i k_a(a_i, A_k) per training record
    Matrix kbar_;    // grid x n: mean_i k((x_g, a_i), X_k)
    Vector grid_g_;
    Matrix mu_;
};

/// Maximises the simulation value over X x A by multistart Nelder-Mead (each candidate's x is
/// appended to the grid) and re-evaluates the winner with voi_simulation.
VoiEstimate max_voi_simulation(const DiscreteModel& model, const BoxBounds& x_box, const BoxBounds& a_box,
                               double sim_cost, const AcquisitionOptions& opts, Rng& rng);

/// Value of one more observation from `spec`, by Monte Carlo over n_r predictive draws with
/// importance weights on the frozen parameter samples. The GP is not refitted.
///
/// Each draw contributes max_g (1/N_A) sum_j (mu(x_g, a_j) - mu(x_r, a_j)) w_j, where x_r is the
/// current best grid point, so every term is >= 0.
VoiEstimate voi_source(const SourceSpec& spec, const DiscreteModel& model, const ParameterPosterior& post,
                       const std::vector<SourceSpec>& specs, const SourceDataset& data, int n_r, Rng& rng);

struct Recommendation {
    Vector x;
    double value = 0.0;
};

/// argmax_x of predicted performance: best grid point polished by a short multistart search.
Recommendation recommend(const DiscreteModel& model, const BoxBounds& x_box, const AcquisitionOptions& opts,
                         Rng& rng);

} // namespace bico
