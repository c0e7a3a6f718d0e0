#pragma once

// Reference implementations used only by the tests. They favour directness over speed: dense
// inverses instead of factor solves, brute-force Monte Carlo instead of closed forms, and
// quadrature instead of analytic normalisers.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bico/acquisition.hpp"
#include "bico/gp_surrogate.hpp"
#include "bico/parameter_posterior.hpp"

namespace oracle {

using bico::Matrix;
using bico::Vector;

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v)
{
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

/// Squared-exponential kernel written out independently of the library.
inline double se_kernel(const Vector& p, const Vector& q, double s0, const Vector& ls)
{
    double s = 0.0;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
        const double l = ls.size() == 1 ? ls[0] : ls[d];
        s += (p[d] - q[d]) * (p[d] - q[d]) / (l * l);
    }
    return s0 * std::exp(-0.5 * s);
}

/// Dense-inverse GP posterior with constant prior mean m0.
class DenseGp {
public:
    DenseGp(Matrix x, Vector y, double s0, Vector ls, double noise, double m0)
        : x_(std::move(x)), s0_(s0), ls_(std::move(ls)), m0_(m0)
    {
        const auto n = x_.rows();
        Matrix k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) k(i, j) = se_kernel(x_.row(i), x_.row(j), s0_, ls_);
        }
        k.diagonal().array() += noise;
        kinv_ = k.fullPivLu().inverse();
        alpha_ = kinv_ * (y.array() - m0_).matrix();
    }

    [[nodiscard]] Vector cross(const Vector& p) const
    {
        Vector c(x_.rows());
        for (Eigen::Index i = 0; i < x_.rows(); ++i) c[i] = se_kernel(x_.row(i), p, s0_, ls_);
        return c;
    }
    [[nodiscard]] double mean(const Vector& p) const { return m0_ + cross(p).dot(alpha_); }
    [[nodiscard]] double cov(const Vector& p, const Vector& q) const
    {
        return se_kernel(p, q, s0_, ls_) - cross(p).dot(kinv_ * cross(q));
    }

private:
    Matrix x_;
    double s0_;
    Vector ls_;
    double m0_;
    Matrix kinv_;
    Vector alpha_;
};

/// Evidence via a dense determinant and inverse.
inline double dense_lml(const Matrix& x, const Vector& y, double s0, const Vector& ls, double noise, double m0)
{
    const auto n = x.rows();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = se_kernel(x.row(i), x.row(j), s0, ls);
    }
    k.diagonal().array() += noise;
    const Vector r = y.array() - m0;
    const double quad = r.dot(k.fullPivLu().inverse() * r);
    return -0.5 * quad - 0.5 * std::log(k.determinant()) - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// E[max_i(a_i + b_i Z)] - max_i a_i by plain Monte Carlo.
inline MeanSe kg_monte_carlo(const Vector& a, const Vector& b, int draws, std::mt19937_64& rng)
{
    std::normal_distribution<double> z(0.0, 1.0);
    const double base = a.maxCoeff();
    std::vector<double> v(draws);
    for (int k = 0; k < draws; ++k) v[k] = (a + b * z(rng)).maxCoeff() - base;
    return mean_se(v);
}

/// Composite Simpson rule on [lo, hi] with an even number of panels.
template <class F>
double simpson(F f, double lo, double hi, int panels = 4000)
{
    if (panels % 2) ++panels;
    const double h = (hi - lo) / panels;
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Truncated Gaussian density normalised by quadrature rather than by the CDF.
inline double truncated_pdf_by_quadrature(double a, double mean, double var, double lo, double hi)
{
    if (a < lo || a > hi) return 0.0;
    auto g = [&](double t) { return std::exp(-0.5 * (t - mean) * (t - mean) / var); };
    return g(a) / simpson(g, lo, hi, 20000);
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Asymptotic KS critical value at alpha = 0.01.
inline double ks_critical_01(int n)
{
    return 1.628 / std::sqrt(static_cast<double>(n));
}

/// One-step look-ahead gain of a simulation at `next`, by drawing y from the predictive
/// distribution, refitting the GP with the same hyperparameters and prior mean, and comparing
/// the maxima of predicted performance over grid + {next.x}.
inline MeanSe voi_simulation_refit_mc(const bico::JointPoint& next, const bico::GpPosterior& g,
                                      const bico::DiscretizationSet& disc, int draws, std::mt19937_64& rng)
{
    std::vector<Vector> xs = disc.x_grid;
    xs.push_back(next.x);
    auto best = [&](const bico::GpPosterior& gp) {
        double m = -INFINITY;
        for (const auto& x : xs) m = std::max(m, bico::predicted_performance(x, gp, disc));
        return m;
    };
    const double before = best(g);
    const auto pred = g.predictive_y(next);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> gains(draws);
    for (int k = 0; k < draws; ++k) {
        bico::SimulationDataset data = g.dataset();
        data.add(next, pred.mean + std::sqrt(pred.var) * z(rng));
        const auto refit = bico::GpPosterior::fit(data, g.hyper(), g.prior_mean());
        gains[k] = best(refit) - before;
    }
    return mean_se(gains);
}

/// Value of one more observation from the only source of a one-dimensional parameter, without
/// importance sampling: every predictive draw rebuilds the posterior density from the raw data
/// and integrates the GP mean against it by Simpson quadrature.
inline MeanSe voi_source_quadrature(const bico::SourceSpec& spec, const bico::GpPosterior& g,
                                    const bico::ParameterPosterior& post, const bico::SourceDataset& data,
                                    const std::vector<Vector>& x_grid, int draws, std::mt19937_64& rng,
                                    int panels = 1000)
{
    const double lo = post.box().lo(0);
    const double hi = post.box().hi(0);
    // Mean surface on the quadrature nodes, computed once.
    const int nodes = panels + 1;
    Matrix mu(static_cast<Eigen::Index>(x_grid.size()), nodes);
    for (std::size_t gi = 0; gi < x_grid.size(); ++gi) {
        for (int k = 0; k < nodes; ++k) {
            Vector p(x_grid[gi].size() + 1);
            p << x_grid[gi], lo + (hi - lo) * k / panels;
            mu(static_cast<Eigen::Index>(gi), k) = g.mean(p);
        }
    }
    // Flat prior times Gaussian likelihood of every observation, normalised numerically.
    auto best = [&](const bico::SourceDataset& d) {
        double m = 0.0;
        double sum = 0.0;
        for (const auto& s : d.samples()) {
            m += 1.0;
            sum += s.r;
        }
        const double h = (hi - lo) / panels;
        Vector w(nodes);
        for (int k = 0; k < nodes; ++k) {
            const double a = lo + h * k;
            const double c = (k == 0 || k == panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            const double dens = m > 0.0 ? std::exp(-0.5 * m * (a - sum / m) * (a - sum / m) / spec.obs_noise_var) : 1.0;
            w[k] = c * dens;
        }
        w /= w.sum();
        return (mu * w).maxCoeff();
    };
    const double before = best(data);
    std::vector<double> gains(draws);
    for (int k = 0; k < draws; ++k) {
        const double r = bico::predictive_sample(spec, post, rng);
        bico::SourceDataset extended = data;
        extended.add(spec.id, r);
        gains[k] = best(extended) - before;
    }
    auto out = mean_se(gains);
    out.mean /= spec.cost;
    out.se /= spec.cost;
    return out;
}

} // namespace oracle
