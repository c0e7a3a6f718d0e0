#include "bico/parameter_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bico/normal.hpp"

namespace bico {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

} // namespace

int SourceDataset::count(int source) const
{
    return static_cast<int>(std::count_if(samples_.begin(), samples_.end(),
                                          [&](const SourceSample& s) { return s.source == source; }));
}

DimensionBelief DimensionBelief::uniform(double lo, double hi)
{
    DimensionBelief b;
    b.lo = lo;
    b.hi = hi;
    b.has_data = false;
    return b;
}

DimensionBelief DimensionBelief::truncated_gaussian(double mean, double var, double lo, double hi)
{
    if (!(var > 0.0)) throw std::invalid_argument("DimensionBelief: variance must be > 0");
    DimensionBelief b;
    b.lo = lo;
    b.hi = hi;
    b.has_data = true;
    b.mean = mean;
    b.var = var;
    const double sd = std::sqrt(var);
    b.log_norm = normal::log_interval_mass((lo - mean) / sd, (hi - mean) / sd);
    return b;
}

double DimensionBelief::log_pdf(double a) const
{
    if (!(a >= lo && a <= hi)) return kNegInf;
    if (!has_data) return -std::log(hi - lo);
    const double sd = std::sqrt(var);
    const double z = (a - mean) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi) - log_norm;
}

double DimensionBelief::pdf(double a) const
{
    return std::exp(log_pdf(a));
}

double DimensionBelief::cdf(double a) const
{
    if (a <= lo) return 0.0;
    if (a >= hi) return 1.0;
    if (!has_data) return (a - lo) / (hi - lo);
    const double sd = std::sqrt(var);
    const double alpha = (lo - mean) / sd;
    return std::exp(normal::log_interval_mass(alpha, (a - mean) / sd) - log_norm);
}

double DimensionBelief::sample(Rng& rng) const
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    if (!has_data) return std::min(hi, lo + u * (hi - lo));

    const double sd = std::sqrt(var);
    double alpha = (lo - mean) / sd;
    double beta = (hi - mean) / sd;
    // Reflect an upper-tail interval into the lower tail, where Phi keeps its precision.
    const bool flip = alpha > 0.0;
    if (flip) {
        std::swap(alpha, beta);
        alpha = -alpha;
        beta = -beta;
    }
    const double pa = normal::cdf(alpha);
    const double pb = normal::cdf(beta);
    double z;
    if (pb - pa > 0.0) {
        z = normal::quantile(pa + u * (pb - pa));
        z = std::clamp(z, alpha, beta);
    } else {
        // Interval beyond double precision in the tail: all mass sits at the near edge.
        z = beta;
    }
    if (flip) z = -z;
    return std::clamp(mean + sd * z, lo, hi);
}

double DimensionBelief::truncated_mean() const
{
    if (!has_data) return 0.5 * (lo + hi);
    const double sd = std::sqrt(var);
    const double alpha = (lo - mean) / sd;
    const double beta = (hi - mean) / sd;
    const double z = std::exp(log_norm);
    return mean + sd * (normal::pdf(alpha) - normal::pdf(beta)) / z;
}

double ParameterPosterior::log_pdf(const Vector& a) const
{
    if (a.size() != dim()) throw std::invalid_argument("ParameterPosterior::log_pdf: dimension mismatch");
    double s = 0.0;
    for (int j = 0; j < dim(); ++j) {
        const double l = dims_[j].log_pdf(a[j]);
        if (l == kNegInf) return kNegInf;
        s += l;
    }
    return s;
}

double ParameterPosterior::mass(const Vector& lo, const Vector& hi) const
{
    double m = 1.0;
    for (int j = 0; j < dim(); ++j) {
        m *= std::max(0.0, dims_[j].cdf(hi[j]) - dims_[j].cdf(lo[j]));
    }
    return m;
}

std::vector<Vector> ParameterPosterior::sample(int n, Rng& rng) const
{
    if (n < 0) throw std::invalid_argument("ParameterPosterior::sample: n must be >= 0");
    std::vector<Vector> out(n, Vector(dim()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim(); ++j) out[i][j] = dims_[j].sample(rng);
    }
    return out;
}

ParameterPosterior update_posterior(const std::vector<SourceSpec>& specs, const SourceDataset& data,
                                    const BoxBounds& box)
{
    const int dims = box.dim();
    for (const auto& s : specs) {
        if (s.target_dim < 0 || s.target_dim >= dims) {
            throw std::invalid_argument("update_posterior: source " + std::to_string(s.id) +
                                        " targets a dimension outside the parameter box");
        }
        if (!(s.obs_noise_var > 0.0)) {
            throw std::invalid_argument("update_posterior: source noise variance must be > 0");
        }
    }

    // Precision-weighted sums per dimension; reduces to (mean r, s2/m) for a single source.
    std::vector<double> precision(dims, 0.0);
    std::vector<double> weighted(dims, 0.0);
    for (const auto& sample : data.samples()) {
        const auto it = std::find_if(specs.begin(), specs.end(),
                                     [&](const SourceSpec& s) { return s.id == sample.source; });
        if (it == specs.end()) {
            throw std::invalid_argument("update_posterior: observation from undeclared source " +
                                        std::to_string(sample.source));
        }
        precision[it->target_dim] += 1.0 / it->obs_noise_var;
        weighted[it->target_dim] += sample.r / it->obs_noise_var;
    }

    std::vector<DimensionBelief> beliefs;
    beliefs.reserve(dims);
    for (int j = 0; j < dims; ++j) {
        if (precision[j] > 0.0) {
            const double var = 1.0 / precision[j];
            beliefs.push_back(DimensionBelief::truncated_gaussian(weighted[j] * var, var, box.lo(j), box.hi(j)));
        } else {
            beliefs.push_back(DimensionBelief::uniform(box.lo(j), box.hi(j)));
        }
    }
    return {box, std::move(beliefs)};
}

double predictive_sample(const SourceSpec& spec, const ParameterPosterior& post, Rng& rng)
{
    const double a = post.dimension(spec.target_dim).sample(rng);
    std::normal_distribution<double> noise(0.0, std::sqrt(spec.obs_noise_var));
    return a + noise(rng);
}

double importance_weight(const Vector& a, const ParameterPosterior& old_post,
                         const ParameterPosterior& new_post)
{
    const double lo = old_post.log_pdf(a);
    if (lo == kNegInf) {
        throw std::invalid_argument("importance_weight: sample has zero density under the old posterior");
    }
    const double ln = new_post.log_pdf(a);
    if (ln == kNegInf) return 0.0;
    return std::exp(ln - lo);
}

double importance_weight(const Vector& a, const SourceDataset& old_data, const SourceDataset& new_data,
                         const std::vector<SourceSpec>& specs, const BoxBounds& box)
{
    return importance_weight(a, update_posterior(specs, old_data, box), update_posterior(specs, new_data, box));
}

} // namespace bico
