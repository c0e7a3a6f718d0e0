#pragma once

#include <optional>
#include <vector>

#include "bico/common.hpp"
#include "bico/inner_optim.hpp"

namespace bico {

struct SimulationRecord {
    JointPoint point;
    double y = 0.0;
};

/// The simulation history (x, a, y) in insertion order.
class SimulationDataset {
public:
    SimulationDataset() = default;
    SimulationDataset(int dim_x, int dim_a) : dim_x_(dim_x), dim_a_(dim_a) {}

    void add(JointPoint p, double y);

    [[nodiscard]] int size() const { return static_cast<int>(records_.size()); }
    [[nodiscard]] bool empty() const { return records_.empty(); }
    [[nodiscard]] int dim_x() const { return dim_x_; }
    [[nodiscard]] int dim_a() const { return dim_a_; }
    [[nodiscard]] const std::vector<SimulationRecord>& records() const { return records_; }
    [[nodiscard]] const SimulationRecord& operator[](int i) const { return records_[i]; }

    /// n x (D + J) matrix of joined inputs.
    [[nodiscard]] Matrix inputs() const;
    [[nodiscard]] Vector outputs() const;

private:
    int dim_x_ = 0;
    int dim_a_ = 0;
    std::vector<SimulationRecord> records_;
};

/// Squared-exponential hyperparameters. `lengthscales` holds either one shared value or one
/// value per joint dimension (x dims first, then a dims).
struct GpHyperparams {
    double signal_var = 1.0;
    Vector lengthscales = Vector::Constant(1, 1.0);
    double noise_var = 0.0;

    [[nodiscard]] bool shared() const { return lengthscales.size() == 1; }
    [[nodiscard]] double lengthscale(int d) const { return shared() ? lengthscales[0] : lengthscales[d]; }
    /// Throws std::invalid_argument unless all values are finite and in range.
    void validate(int joint_dim) const;
};

/// sigma0^2 * exp(-1/2 sum_d (p_d - q_d)^2 / l_d^2) on joined coordinates.
double kernel_eval(const Vector& p, const Vector& q, const GpHyperparams& h);
double kernel_eval(const JointPoint& p, const JointPoint& q, const GpHyperparams& h);

/// Gram matrix between two sets of joined points (rows are points).
Matrix kernel_matrix(const Matrix& p, const Matrix& q, const GpHyperparams& h);

/// Exact GP posterior with constant prior mean. Immutable once built.
///
/// The prior mean defaults to the sample mean of the outputs (the zero-mean prior applied to
/// centred outputs). The one-step update identities used by the acquisition code hold for a
/// fixed prior mean, so callers that compare two fits pass it explicitly.
class GpPosterior {
public:
    static GpPosterior fit(const SimulationDataset& data, const GpHyperparams& hyper);
    static GpPosterior fit(const SimulationDataset& data, const GpHyperparams& hyper, double prior_mean);
    /// Prior process (no observations).
    static GpPosterior prior(int dim_x, int dim_a, const GpHyperparams& hyper, double prior_mean = 0.0);

    [[nodiscard]] double mean(const JointPoint& p) const { return mean(p.joined()); }
    [[nodiscard]] double mean(const Vector& joined) const;
    [[nodiscard]] double covariance(const JointPoint& p, const JointPoint& q) const;
    [[nodiscard]] double covariance(const Vector& p, const Vector& q) const;
    /// Posterior variance clamped at zero.
    [[nodiscard]] double variance(const Vector& p) const;

    struct Predictive {
        double mean;
        double var;
    };
    /// Distribution of a new noisy observation y at p: (mu^n(p), k^n(p,p) + noise).
    [[nodiscard]] Predictive predictive_y(const JointPoint& p) const;

    /// k^n(p, next) / sqrt(k^n(next, next) + noise). Zero when the denominator vanishes
    /// (noise-free model, next duplicating a training input).
    [[nodiscard]] double sigma_tilde(const JointPoint& p, const JointPoint& next) const;

    /// Precomputed state for many sigma_tilde(., next) evaluations with one `next`.
    /// Every sigma_tilde call goes through this type, so batched and single calls agree bit for bit.
    class SigmaTilde {
    public:
        SigmaTilde(const GpPosterior& gp, const Vector& next);
        [[nodiscard]] double operator()(const Vector& p) const;
        [[nodiscard]] double denominator() const { return denom_; }

    private:
        const GpPosterior* gp_;
        Vector next_;
        Vector solved_; // (K + noise I)^{-1} k(X, next)
        double denom_;
    };

    [[nodiscard]] const SimulationDataset& dataset() const { return data_; }
    [[nodiscard]] const GpHyperparams& hyper() const { return hyper_; }
    [[nodiscard]] double prior_mean() const { return prior_mean_; }
    [[nodiscard]] double jitter() const { return jitter_; }
    [[nodiscard]] int size() const { return static_cast<int>(inputs_.rows()); }
    [[nodiscard]] int dim_x() const { return dim_x_; }
    [[nodiscard]] int dim_a() const { return dim_a_; }
    [[nodiscard]] const Matrix& inputs() const { return inputs_; }
    /// (K + noise I)^{-1} (Y - prior_mean).
    [[nodiscard]] const Vector& weights() const { return weights_; }
    /// Lower Cholesky factor of K + (noise + jitter) I.
    [[nodiscard]] const Matrix& chol() const { return chol_; }

    /// Kernel column k(X, p) against the training inputs.
    [[nodiscard]] Vector cross(const Vector& p) const;
    /// (K + noise I)^{-1} v via the stored factor.
    [[nodiscard]] Vector solve(const Vector& v) const;

private:
    GpPosterior() = default;

    SimulationDataset data_;
    GpHyperparams hyper_;
    double prior_mean_ = 0.0;
    double jitter_ = 0.0;
    int dim_x_ = 0;
    int dim_a_ = 0;
    Matrix inputs_;
    Matrix chol_;
    Vector weights_;
};

/// Lower Cholesky factor of a symmetric matrix, retrying with diagonal jitter
/// 1e-10, 1e-9, ..., 1e-6 times `scale`. Throws NumericError if every attempt fails.
Matrix cholesky_with_jitter(const Matrix& a, double scale, double* jitter_used = nullptr);

/// Zero-mean Gaussian evidence of the centred outputs:
///   -1/2 r^T K^{-1} r - 1/2 log det K - n/2 log 2 pi,  r = Y - prior_mean, K = Gram + noise I.
/// prior_mean defaults to the output sample mean, matching GpPosterior::fit.
double log_marginal_likelihood(const SimulationDataset& data, const GpHyperparams& hyper);
double log_marginal_likelihood(const SimulationDataset& data, const GpHyperparams& hyper,
                               double prior_mean);

/// Box for the hyperparameter search. The lengthscale bounds have one entry per searched
/// lengthscale (1 for the shared mode).
struct HyperBounds {
    double signal_lo = 1e-3, signal_hi = 1e3;
    Vector length_lo = Vector::Constant(1, 1e-3);
    Vector length_hi = Vector::Constant(1, 1e3);
    double noise_lo = 1e-3, noise_hi = 1e3;

    [[nodiscard]] bool shared() const { return length_lo.size() == 1; }
    [[nodiscard]] bool contains(const GpHyperparams& h) const;
    [[nodiscard]] GpHyperparams midpoint() const; // geometric midpoint
};

/// [1e-3, 1e3] times the data scales: output variance for signal and noise, input range per
/// dimension for the lengthscales.
HyperBounds default_hyper_bounds(const SimulationDataset& data, bool shared_lengthscale);

struct HyperFitOptions {
    int restarts = 10;
    int max_evals = 150;
};

struct HyperFit {
    GpHyperparams hyper;
    double log_likelihood = 0.0;
    /// True when no start produced a finite likelihood and the bounds midpoint was returned.
    bool fell_back = false;
};

/// Maximises log_marginal_likelihood over `bounds` in log space with multistart Nelder-Mead.
/// `seeds` (e.g. the previous fit) are used as extra start points.
HyperFit fit_hyperparameters(const SimulationDataset& data, const HyperBounds& bounds, Rng& rng,
                             const HyperFitOptions& opts = {},
                             const std::vector<GpHyperparams>& seeds = {});

} // namespace bico
