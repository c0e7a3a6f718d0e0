#include "bico/testbeds.hpp"

#include <cmath>
#include <memory>

#include "bico/inner_optim.hpp"
#include "bico/normal.hpp"

namespace bico {

// --- Truth oracle ----------------------------------------------------------------------------

namespace {

std::vector<Vector> oracle_grid(const BoxBounds& box)
{
    const int dim = box.dim();
    const int per_dim = std::max(2, static_cast<int>(std::ceil(std::pow(1e4, 1.0 / dim))));
    long total = 1;
    for (int d = 0; d < dim; ++d) total *= per_dim;

    std::vector<Vector> grid;
    grid.reserve(static_cast<std::size_t>(total));
    for (long idx = 0; idx < total; ++idx) {
        Vector v(dim);
        long rest = idx;
        for (int d = 0; d < dim; ++d) {
            const long k = rest % per_dim;
            rest /= per_dim;
            v[d] = box.lo(d) + box.width(d) * static_cast<double>(k) / (per_dim - 1);
        }
        grid.push_back(std::move(v));
    }
    return grid;
}

} // namespace

TruthOracle make_truth_oracle(std::function<double(const Vector&, const Vector&)> theta, Vector a_star,
                              const BoxBounds& x_box, const std::optional<Vector>& hint)
{
    TruthOracle oracle;
    oracle.a_star = std::move(a_star);
    oracle.theta = std::move(theta);

    auto at_truth = [&](const Vector& x) { return oracle.theta(x, oracle.a_star); };
    const auto grid = oracle_grid(x_box);
    const auto [best_idx, best_value] = discrete_max(at_truth, grid);
    if (best_idx < 0) throw NumericError("make_truth_oracle: theta is not finite anywhere on the grid");

    if (hint) {
        const double hinted = at_truth(*hint);
        if (best_value > hinted + 1e-9) {
            throw NumericError("make_truth_oracle: grid search beats the supplied optimum");
        }
        oracle.x_star = *hint;
        oracle.theta_star = hinted;
        return oracle;
    }

    NelderMeadOptions nm;
    nm.max_evals = 400;
    nm.initial_step = 0.01;
    nm.relative_diameter_tol = 1e-10;
    const OptimResult polished = nelder_mead_max(at_truth, x_box, grid[best_idx], nm);
    if (polished.value >= best_value) {
        oracle.x_star = polished.x;
        oracle.theta_star = polished.value;
    } else {
        oracle.x_star = grid[best_idx];
        oracle.theta_star = best_value;
    }
    return oracle;
}

double opportunity_cost(const Vector& x_r, const TruthOracle& oracle)
{
    return oracle.theta_star - oracle.theta_true(x_r);
}

double source_simulate(const SourceSpec& spec, const Vector& a_star, Rng& rng)
{
    if (spec.target_dim < 0 || spec.target_dim >= a_star.size()) {
        throw std::invalid_argument("source_simulate: target dimension out of range");
    }
    if (spec.obs_noise_var <= 0.0) return a_star[spec.target_dim];
    std::normal_distribution<double> noise(0.0, std::sqrt(spec.obs_noise_var));
    return a_star[spec.target_dim] + noise(rng);
}

// --- Newsvendor ------------------------------------------------------------------------------

void NewsvendorConfig::validate() const
{
    if (!(cost > 0.0)) throw ConfigError("newsvendor.cost must be > 0");
    if (!(price > cost)) throw ConfigError("newsvendor.price must exceed newsvendor.cost");
    if (!(demand_var > 0.0)) throw ConfigError("newsvendor.demand_var must be > 0");
    if (x_bounds.dim() != 1 || a_bounds.dim() != 1) {
        throw ConfigError("newsvendor bounds must be one-dimensional");
    }
}

double newsvendor_simulate(double x, double a, const NewsvendorConfig& cfg, Rng& rng)
{
    std::normal_distribution<double> demand(a, std::sqrt(cfg.demand_var));
    const double c = demand(rng);
    return cfg.price * std::min(x, c) - cfg.cost * x;
}

double newsvendor_theta(double x, double a, const NewsvendorConfig& cfg)
{
    const double s = std::sqrt(cfg.demand_var);
    const double d = (a - x) / s;
    const double expected_sold = a - s * normal::pdf(d) - (a - x) * normal::cdf(d);
    return cfg.price * expected_sold - cfg.cost * x;
}

std::pair<double, double> newsvendor_xstar(const NewsvendorConfig& cfg)
{
    if (!(cfg.price > cfg.cost)) throw std::invalid_argument("newsvendor_xstar: price must exceed cost");
    const double x = cfg.true_mean + std::sqrt(cfg.demand_var) * normal::quantile((cfg.price - cfg.cost) / cfg.price);
    return {x, newsvendor_theta(x, cfg.true_mean, cfg)};
}

Problem make_newsvendor_problem(const NewsvendorConfig& cfg, double source_noise_var, double source_cost)
{
    cfg.validate();
    Problem problem;
    problem.x_box = cfg.x_bounds;
    problem.a_box = cfg.a_bounds;
    problem.simulate = [cfg](const JointPoint& p, Rng& rng) { return newsvendor_simulate(p.x[0], p.a[0], cfg, rng); };

    SourceSpec spec;
    spec.id = 0;
    spec.target_dim = 0;
    spec.obs_noise_var = source_noise_var;
    spec.cost = source_cost;
    problem.sources = {spec};

    const Vector a_star = Vector::Constant(1, cfg.true_mean);
    problem.query = [spec, a_star](int, Rng& rng) { return source_simulate(spec, a_star, rng); };

    auto theta = [cfg](const Vector& x, const Vector& a) { return newsvendor_theta(x[0], a[0], cfg); };
    const Vector x_star = Vector::Constant(1, newsvendor_xstar(cfg).first);
    std::optional<Vector> hint;
    if (cfg.x_bounds.contains(x_star)) hint = x_star;
    problem.truth = make_truth_oracle(theta, a_star, cfg.x_bounds, hint);
    return problem;
}

// --- GP test functions -----------------------------------------------------------------------

GpTestFunction::GpTestFunction(BoxBounds x_box, BoxBounds a_box, GpHyperparams hyper, Matrix anchors,
                               Vector alpha, bool depends_on_a)
    : x_box_(std::move(x_box)),
      a_box_(std::move(a_box)),
      hyper_(std::move(hyper)),
      anchors_(std::move(anchors)),
      alpha_(std::move(alpha)),
      depends_on_a_(depends_on_a)
{
    const int cols = x_box_.dim() + (depends_on_a_ ? a_box_.dim() : 0);
    if (anchors_.cols() != cols || anchors_.rows() != alpha_.size()) {
        throw std::invalid_argument("GpTestFunction: anchor shape mismatch");
    }
    anchor_values_.resize(anchors_.rows());
    for (Eigen::Index i = 0; i < anchors_.rows(); ++i) anchor_values_[i] = interpolate(anchors_.row(i).transpose());
}

double GpTestFunction::interpolate(const Vector& p) const
{
    const auto dim = anchors_.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < anchors_.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index d = 0; d < dim; ++d) {
            const double r = (p[d] - anchors_(i, d)) / hyper_.lengthscale(static_cast<int>(d));
            s += r * r;
        }
        total += std::exp(-0.5 * s) * alpha_[i];
    }
    return hyper_.signal_var * total;
}

double GpTestFunction::theta(const Vector& x, const Vector& a) const
{
    if (!depends_on_a_) return interpolate(x);
    Vector joined(x.size() + a.size());
    joined << x, a;
    return interpolate(joined);
}

double GpTestFunction::theta(const Vector& joined) const
{
    return interpolate(joined);
}

double GpTestFunction::simulate(const Vector& x, const Vector& a, Rng& rng) const
{
    const double value = theta(x, a);
    if (hyper_.noise_var <= 0.0) return value;
    std::normal_distribution<double> noise(0.0, std::sqrt(hyper_.noise_var));
    return value + noise(rng);
}

GpTestInstance gp_testfunc_build(std::uint64_t seed, const GpHyperparams& hyper, int n_anchor,
                                 const BoxBounds& x_box, const BoxBounds& a_box, bool depends_on_a)
{
    if (n_anchor < 1) throw std::invalid_argument("gp_testfunc_build: n_anchor must be >= 1");
    const BoxBounds anchor_box = depends_on_a ? x_box.join(a_box) : x_box;
    hyper.validate(anchor_box.dim());

    Rng rng(mix_seed(seed, 0));
    const auto points = lhs_sample(n_anchor, anchor_box, rng);
    Matrix anchors(n_anchor, anchor_box.dim());
    for (int i = 0; i < n_anchor; ++i) anchors.row(i) = points[i].transpose();

    // A small floor on the diagonal keeps the factor well conditioned for dense anchors.
    GpHyperparams unit = hyper;
    unit.noise_var = 0.0;
    Matrix gram = kernel_matrix(anchors, anchors, unit);
    gram.diagonal().array() += 1e-8 * hyper.signal_var;
    const Matrix chol = cholesky_with_jitter(gram, hyper.signal_var);

    std::normal_distribution<double> std_normal(0.0, 1.0);
    Vector z(n_anchor);
    for (int i = 0; i < n_anchor; ++i) z[i] = std_normal(rng);
    Vector alpha = chol.transpose().triangularView<Eigen::Upper>().solve(z);

    Rng a_rng(mix_seed(seed, 1));
    Vector a_star = a_box.lo();
    std::uniform_real_distribution<double> unit01(0.0, 1.0);
    for (int j = 0; j < a_box.dim(); ++j) a_star[j] = a_box.lo(j) + unit01(a_rng) * a_box.width(j);

    GpTestFunction fn(x_box, a_box, hyper, std::move(anchors), std::move(alpha), depends_on_a);
    auto shared = std::make_shared<const GpTestFunction>(fn);
    TruthOracle truth =
        make_truth_oracle([shared](const Vector& x, const Vector& a) { return shared->theta(x, a); },
                          std::move(a_star), x_box);
    return {std::move(fn), std::move(truth)};
}

Problem make_gp_problem(const GpTestInstance& inst, double source_noise_var, double source_cost)
{
    auto fn = std::make_shared<const GpTestFunction>(inst.fn);
    Problem problem;
    problem.x_box = fn->x_box();
    problem.a_box = fn->a_box();
    problem.simulate = [fn](const JointPoint& p, Rng& rng) { return fn->simulate(p.x, p.a, rng); };
    for (int j = 0; j < fn->a_box().dim(); ++j) {
        SourceSpec spec;
        spec.id = j;
        spec.target_dim = j;
        spec.obs_noise_var = source_noise_var;
        spec.cost = source_cost;
        problem.sources.push_back(spec);
    }
    const Vector a_star = inst.truth.a_star;
    const auto specs = problem.sources;
    problem.query = [specs, a_star](int s, Rng& rng) { return source_simulate(specs.at(s), a_star, rng); };
    problem.truth = inst.truth;
    return problem;
}

} // namespace bico
