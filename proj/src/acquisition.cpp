#include "bico/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bico/normal.hpp"

namespace bico {

DiscretizationSet make_discretization(const BoxBounds& x_box, int grid_size,
                                      const ParameterPosterior& post, int n_a_samples, Rng& rng)
{
    if (grid_size < 1 || n_a_samples < 1) {
        throw std::invalid_argument("make_discretization: grid and sample counts must be >= 1");
    }
    DiscretizationSet disc;
    disc.x_grid = lhs_sample(grid_size, x_box, rng);
    disc.a_samples = post.sample(n_a_samples, rng);
    return disc;
}

namespace {

Vector join(const Vector& x, const Vector& a)
{
    Vector v(x.size() + a.size());
    v << x, a;
    return v;
}

/// f(z) = z Phi(z) + phi(z) for z <= 0, stable in the far tail.
double expected_positive_part(double z)
{
    if (z < -8.0) {
        const double z2 = z * z;
        return normal::pdf(z) / z2 * (1.0 - 3.0 / z2 + 15.0 / (z2 * z2));
    }
    return std::max(0.0, z * normal::cdf(z) + normal::pdf(z));
}

} // namespace

double predicted_performance(const Vector& x, const GpPosterior& g, const DiscretizationSet& disc)
{
    if (disc.a_samples.empty()) throw std::invalid_argument("predicted_performance: no parameter samples");
    double s = 0.0;
    for (const auto& a : disc.a_samples) s += g.mean(join(x, a));
    return s / static_cast<double>(disc.a_samples.size());
}

double kg_discrete(const Vector& means, const Vector& slopes)
{
    const auto n = means.size();
    if (n == 0 || slopes.size() != n) {
        throw std::invalid_argument("kg_discrete: need equal, non-empty means and slopes");
    }
    constexpr double kTieTol = 1e-12;

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        if (slopes[i] != slopes[j]) return slopes[i] < slopes[j];
        return means[i] < means[j];
    });

    // Collapse slope ties onto the line with the largest intercept.
    std::vector<double> a;
    std::vector<double> b;
    a.reserve(n);
    b.reserve(n);
    for (Eigen::Index idx : order) {
        if (!b.empty() && slopes[idx] - b.back() <= kTieTol) {
            if (means[idx] >= a.back()) {
                a.back() = means[idx];
                b.back() = slopes[idx];
            }
            continue;
        }
        a.push_back(means[idx]);
        b.push_back(slopes[idx]);
    }

    // Upper envelope: stack of lines with the breakpoint where each becomes maximal.
    std::vector<double> env_a;
    std::vector<double> env_b;
    std::vector<double> breaks; // breaks[k] = z where line k takes over from line k-1
    for (std::size_t j = 0; j < a.size(); ++j) {
        double z = -std::numeric_limits<double>::infinity();
        while (!env_a.empty()) {
            z = (env_a.back() - a[j]) / (b[j] - env_b.back());
            if (env_a.size() > 1 && z <= breaks.back()) {
                env_a.pop_back();
                env_b.pop_back();
                breaks.pop_back();
                continue;
            }
            break;
        }
        if (env_a.empty()) z = -std::numeric_limits<double>::infinity();
        env_a.push_back(a[j]);
        env_b.push_back(b[j]);
        breaks.push_back(z);
    }

    // Piecewise-linear convex envelope h: E[h(Z)] - h(0) = sum over kinks of
    // (slope jump) * E[(Z - c)^+ or (c - Z)^+] = (b_{k} - b_{k-1}) f(-|c_k|).
    double kg = 0.0;
    for (std::size_t k = 1; k < env_a.size(); ++k) {
        kg += (env_b[k] - env_b[k - 1]) * expected_positive_part(-std::abs(breaks[k]));
    }
    return std::max(0.0, kg);
}

KgLines simulation_lines(const JointPoint& next, const GpPosterior& g, const DiscretizationSet& disc)
{
    if (disc.a_samples.empty()) throw std::invalid_argument("simulation_lines: no parameter samples");
    KgLines lines;
    lines.xs = disc.x_grid;
    lines.xs.push_back(next.x);
    const auto m = static_cast<Eigen::Index>(lines.xs.size());
    lines.means.resize(m);
    lines.slopes.resize(m);

    const GpPosterior::SigmaTilde st(g, next.joined());
    const auto n_a = static_cast<double>(disc.a_samples.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        double mean = 0.0;
        double slope = 0.0;
        for (const auto& a : disc.a_samples) {
            const Vector p = join(lines.xs[i], a);
            mean += g.mean(p);
            slope += st(p);
        }
        lines.means[i] = mean / n_a;
        lines.slopes[i] = slope / n_a;
    }
    return lines;
}

VoiEstimate voi_simulation(const JointPoint& next, const GpPosterior& g, const DiscretizationSet& disc,
                           double sim_cost)
{
    if (!(sim_cost > 0.0)) throw std::invalid_argument("voi_simulation: simulation cost must be > 0");
    const KgLines lines = simulation_lines(next, g, disc);
    VoiEstimate est;
    est.value = kg_discrete(lines.means, lines.slopes) / sim_cost;
    est.point = next;
    return est;
}

// ---------------------------------------------------------------------------

DiscreteModel::DiscreteModel(const GpPosterior& g, const DiscretizationSet& disc) : gp_(&g), disc_(&disc)
{
    if (disc.a_samples.empty() || disc.x_grid.empty()) {
        throw std::invalid_argument("DiscreteModel: empty discretisation");
    }
    const int dx = g.dim_x();
    const int da = g.dim_a();
    const auto& h = g.hyper();
    x_len_.resize(dx);
    a_len_.resize(da);
    for (int d = 0; d < dx; ++d) x_len_[d] = h.lengthscale(d);
    for (int j = 0; j < da; ++j) a_len_[j] = h.lengthscale(dx + j);

    const int n = g.size();
    const auto n_grid = static_cast<Eigen::Index>(disc.x_grid.size());
    const auto n_a = static_cast<Eigen::Index>(disc.a_samples.size());
    const Matrix& inputs = g.inputs();

    Matrix ea(n_a, n);
    for (Eigen::Index i = 0; i < n_a; ++i) {
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int j = 0; j < da; ++j) {
                const double r = (disc.a_samples[i][j] - inputs(k, dx + j)) / a_len_[j];
                s += r * r;
            }
            ea(i, k) = std::exp(-0.5 * s);
        }
    }
    ea_mean_ = n > 0 ? Vector(ea.colwise().mean().transpose()) : Vector(0);

    Matrix ex(n_grid, n);
    for (Eigen::Index gi = 0; gi < n_grid; ++gi) ex.row(gi) = x_part(disc.x_grid[gi]).transpose();

    const double s0 = h.signal_var;
    const double m0 = g.prior_mean();
    if (n > 0) {
        kbar_ = s0 * (ex.array().rowwise() * ea_mean_.transpose().array()).matrix();
        grid_g_ = (kbar_ * g.weights()).array() + m0;
        mu_ = ((s0 * ex * g.weights().asDiagonal()) * ea.transpose()).array() + m0;
    } else {
        kbar_ = Matrix(n_grid, 0);
        grid_g_ = Vector::Constant(n_grid, m0);
        mu_ = Matrix::Constant(n_grid, n_a, m0);
    }
}

Vector DiscreteModel::x_part(const Vector& x) const
{
    const Matrix& inputs = gp_->inputs();
    const int dx = gp_->dim_x();
    Vector out(inputs.rows());
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
        double s = 0.0;
        for (int d = 0; d < dx; ++d) {
            const double r = (x[d] - inputs(k, d)) / x_len_[d];
            s += r * r;
        }
        out[k] = std::exp(-0.5 * s);
    }
    return out;
}

double DiscreteModel::a_part_mean(const Vector& a) const
{
    double total = 0.0;
    for (const auto& ai : disc_->a_samples) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            const double r = (ai[j] - a[j]) / a_len_[j];
            s += r * r;
        }
        total += std::exp(-0.5 * s);
    }
    return total / static_cast<double>(disc_->a_samples.size());
}

double DiscreteModel::performance(const Vector& x) const
{
    if (gp_->size() == 0) return gp_->prior_mean();
    const Vector ex = x_part(x);
    return gp_->prior_mean() +
           gp_->hyper().signal_var * (ex.array() * ea_mean_.array() * gp_->weights().array()).sum();
}

int DiscreteModel::best_grid_index() const
{
    Eigen::Index idx = 0;
    grid_g_.maxCoeff(&idx);
    return static_cast<int>(idx);
}

double DiscreteModel::simulation_value(const JointPoint& next, double sim_cost) const
{
    const GpPosterior& g = *gp_;
    const auto& h = g.hyper();
    const double s0 = h.signal_var;
    const Vector nj = next.joined();

    const double noise = h.noise_var + g.jitter();
    const double var = g.variance(nj);
    if (noise == 0.0 && var <= 1e-9 * s0) return 0.0;
    const double denom = std::sqrt(var + noise);

    const Vector solved = g.size() ? g.solve(g.cross(nj)) : Vector(0);
    const double eam_next = a_part_mean(next.a);

    const auto n_grid = static_cast<Eigen::Index>(disc_->x_grid.size());
    Vector means(n_grid + 1);
    Vector slopes(n_grid + 1);
    means.head(n_grid) = grid_g_;
    for (Eigen::Index gi = 0; gi < n_grid; ++gi) {
        double s = 0.0;
        for (Eigen::Index d = 0; d < next.x.size(); ++d) {
            const double r = (disc_->x_grid[gi][d] - next.x[d]) / x_len_[d];
            s += r * r;
        }
        slopes[gi] = s0 * std::exp(-0.5 * s) * eam_next;
    }
    if (g.size()) slopes.head(n_grid) -= kbar_ * solved;

    // The fantasised solution joins the grid.
    means[n_grid] = performance(next.x);
    slopes[n_grid] = s0 * eam_next;
    if (g.size()) {
        const Vector row = s0 * (x_part(next.x).array() * ea_mean_.array()).matrix();
        slopes[n_grid] -= row.dot(solved);
    }
    slopes /= denom;
    return kg_discrete(means, slopes) / sim_cost;
}

VoiEstimate max_voi_simulation(const DiscreteModel& model, const BoxBounds& x_box, const BoxBounds& a_box,
                               double sim_cost, const AcquisitionOptions& opts, Rng& rng)
{
    if (!(sim_cost > 0.0)) throw std::invalid_argument("max_voi_simulation: simulation cost must be > 0");
    const BoxBounds joint = x_box.join(a_box);
    const int dx = x_box.dim();
    auto objective = [&](const Vector& v) { return model.simulation_value(JointPoint::split(v, dx), sim_cost); };

    NelderMeadOptions nm;
    nm.max_evals = opts.max_evals;
    const OptimResult best = multistart_max(objective, joint, std::max(1, opts.restarts), rng, {}, nm);

    const JointPoint point = JointPoint::split(joint.clip(best.x), dx);
    return voi_simulation(point, model.gp(), model.disc(), sim_cost);
}

VoiEstimate voi_source(const SourceSpec& spec, const DiscreteModel& model, const ParameterPosterior& post,
                       const std::vector<SourceSpec>& specs, const SourceDataset& data, int n_r, Rng& rng)
{
    if (n_r < 1) throw std::invalid_argument("voi_source: n_r must be >= 1");
    if (!(spec.cost > 0.0)) throw std::invalid_argument("voi_source: source cost must be > 0");

    const Matrix& mu = model.mean_matrix();
    const auto& samples = model.disc().a_samples;
    const auto n_a = static_cast<Eigen::Index>(samples.size());

    Eigen::Index old_best = 0;
    mu.rowwise().mean().maxCoeff(&old_best);

    // Old-posterior log densities in the target coordinate; the other coordinates cancel.
    const DimensionBelief& old_dim = post.dimension(spec.target_dim);
    Vector old_log(n_a);
    for (Eigen::Index j = 0; j < n_a; ++j) old_log[j] = old_dim.log_pdf(samples[j][spec.target_dim]);

    std::vector<double> gains;
    gains.reserve(n_r);
    VoiEstimate est;
    est.source = spec.id;

    for (int i = 0; i < n_r; ++i) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            const double r = predictive_sample(spec, post, rng);
            SourceDataset extended = data;
            extended.add(spec.id, r);
            const ParameterPosterior new_post = update_posterior(specs, extended, post.box());
            const DimensionBelief& new_dim = new_post.dimension(spec.target_dim);

            Vector w(n_a);
            for (Eigen::Index j = 0; j < n_a; ++j) {
                const double ln = new_dim.log_pdf(samples[j][spec.target_dim]);
                w[j] = std::isfinite(ln) ? std::exp(ln - old_log[j]) : 0.0;
            }
            const double total = w.sum();
            if (!(total > 0.0) || !std::isfinite(total)) {
                if (attempt == 0) continue;
                ++est.degenerate_draws;
                break;
            }
            const Vector weighted = mu * w;
            const double gain = (weighted.maxCoeff() - weighted[old_best]) / static_cast<double>(n_a);
            gains.push_back(std::max(0.0, gain));
            break;
        }
    }

    if (gains.empty()) {
        est.value = 0.0;
        est.std_err = 0.0;
        return est;
    }
    const double k = static_cast<double>(gains.size());
    const double mean = std::accumulate(gains.begin(), gains.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : gains) ss += (v - mean) * (v - mean);
    const double sd = gains.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    est.value = mean / spec.cost;
    est.std_err = sd / std::sqrt(k) / spec.cost;
    return est;
}

Recommendation recommend(const DiscreteModel& model, const BoxBounds& x_box, const AcquisitionOptions& opts,
                         Rng& rng)
{
    const Vector seed = model.disc().x_grid[model.best_grid_index()];
    auto objective = [&](const Vector& x) { return model.performance(x); };
    NelderMeadOptions nm;
    nm.max_evals = opts.max_evals;
    const OptimResult best =
        multistart_max(objective, x_box, std::max(1, opts.recommend_restarts), rng, {seed}, nm);
    return {x_box.clip(best.x), best.value};
}

} // namespace bico
