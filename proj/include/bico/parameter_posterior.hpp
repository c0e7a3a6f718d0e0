#pragma once

#include <vector>

#include "bico/common.hpp"

namespace bico {

/// An external data source observing one coordinate of the true parameter vector with known
/// Gaussian noise: r ~ N(a*[target_dim], obs_noise_var).
struct SourceSpec {
    int id = 0;
    int target_dim = 0;
    double obs_noise_var = 10.0;
    double cost = 1.0;
};

struct SourceSample {
    int source = 0;
    double r = 0.0;
};

/// Queried (source, observation) pairs in insertion order.
class SourceDataset {
public:
    void add(int source, double r) { samples_.push_back({source, r}); }
    [[nodiscard]] int size() const { return static_cast<int>(samples_.size()); }
    [[nodiscard]] bool empty() const { return samples_.empty(); }
    [[nodiscard]] const std::vector<SourceSample>& samples() const { return samples_; }
    [[nodiscard]] int count(int source) const;

private:
    std::vector<SourceSample> samples_;
};

/// Belief about one coordinate: Uniform(lo, hi) until data arrives, then the flat-prior
/// Gaussian posterior N(mean, var) truncated to [lo, hi].
struct DimensionBelief {
    double lo = 0.0;
    double hi = 1.0;
    bool has_data = false;
    double mean = 0.0; // untruncated location
    double var = 0.0;  // untruncated variance
    double log_norm = 0.0; // log of the Gaussian mass inside [lo, hi]

    [[nodiscard]] double log_pdf(double a) const;
    [[nodiscard]] double pdf(double a) const;
    [[nodiscard]] double cdf(double a) const;
    /// Inverse-CDF draw on the truncated interval.
    [[nodiscard]] double sample(Rng& rng) const;
    /// Mean of the truncated distribution.
    [[nodiscard]] double truncated_mean() const;

    static DimensionBelief uniform(double lo, double hi);
    static DimensionBelief truncated_gaussian(double mean, double var, double lo, double hi);
};

/// Product of independent per-dimension beliefs over the parameter box.
class ParameterPosterior {
public:
    ParameterPosterior() = default;
    ParameterPosterior(BoxBounds box, std::vector<DimensionBelief> dims)
        : box_(std::move(box)), dims_(std::move(dims)) {}

    [[nodiscard]] const BoxBounds& box() const { return box_; }
    [[nodiscard]] int dim() const { return static_cast<int>(dims_.size()); }
    [[nodiscard]] const DimensionBelief& dimension(int j) const { return dims_[j]; }

    /// Sum of per-dimension log densities; -inf outside the box.
    [[nodiscard]] double log_pdf(const Vector& a) const;
    [[nodiscard]] double pdf(const Vector& a) const { return std::exp(log_pdf(a)); }
    /// Posterior probability of the axis-aligned box [lo, hi].
    [[nodiscard]] double mass(const Vector& lo, const Vector& hi) const;

    [[nodiscard]] std::vector<Vector> sample(int n, Rng& rng) const;

private:
    BoxBounds box_;
    std::vector<DimensionBelief> dims_;
};

/// Flat prior on the box times the Gaussian likelihood of every sample. For a dimension with
/// m observations from a source of noise var s2 the result is TruncatedGaussian(mean r, s2/m).
/// Throws std::invalid_argument for undeclared sources.
ParameterPosterior update_posterior(const std::vector<SourceSpec>& specs, const SourceDataset& data,
                                    const BoxBounds& box);

/// Draw from the posterior predictive of the next observation of `spec`: a ~ posterior, then
/// r ~ N(a[target_dim], obs_noise_var).
double predictive_sample(const SourceSpec& spec, const ParameterPosterior& post, Rng& rng);

/// pdf(a | new) / pdf(a | old) with exact truncation normalisers. Throws std::invalid_argument
/// when pdf(a | old) is zero.
double importance_weight(const Vector& a, const ParameterPosterior& old_post,
                         const ParameterPosterior& new_post);
double importance_weight(const Vector& a, const SourceDataset& old_data, const SourceDataset& new_data,
                         const std::vector<SourceSpec>& specs, const BoxBounds& box);

} // namespace bico
