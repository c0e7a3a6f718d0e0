#include "bico/gp_surrogate.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bico {

void SimulationDataset::add(JointPoint p, double y)
{
    if (records_.empty() && dim_x_ == 0 && dim_a_ == 0) {
        dim_x_ = p.dim_x();
        dim_a_ = p.dim_a();
    }
    if (p.dim_x() != dim_x_ || p.dim_a() != dim_a_) {
        throw std::invalid_argument("SimulationDataset::add: dimension mismatch");
    }
    records_.push_back({std::move(p), y});
}

Matrix SimulationDataset::inputs() const
{
    Matrix m(size(), dim_x_ + dim_a_);
    for (int i = 0; i < size(); ++i) {
        m.row(i).head(dim_x_) = records_[i].point.x.transpose();
        m.row(i).tail(dim_a_) = records_[i].point.a.transpose();
    }
    return m;
}

Vector SimulationDataset::outputs() const
{
    Vector y(size());
    for (int i = 0; i < size(); ++i) y[i] = records_[i].y;
    return y;
}

void GpHyperparams::validate(int joint_dim) const
{
    if (!(std::isfinite(signal_var) && signal_var > 0.0)) {
        throw std::invalid_argument("GpHyperparams: signal_var must be finite and > 0");
    }
    if (!(std::isfinite(noise_var) && noise_var >= 0.0)) {
        throw std::invalid_argument("GpHyperparams: noise_var must be finite and >= 0");
    }
    if (lengthscales.size() != 1 && lengthscales.size() != joint_dim) {
        throw std::invalid_argument("GpHyperparams: need 1 or " + std::to_string(joint_dim) +
                                    " lengthscales");
    }
    for (Eigen::Index d = 0; d < lengthscales.size(); ++d) {
        if (!(std::isfinite(lengthscales[d]) && lengthscales[d] > 0.0)) {
            throw std::invalid_argument("GpHyperparams: lengthscales must be finite and > 0");
        }
    }
}

double kernel_eval(const Vector& p, const Vector& q, const GpHyperparams& h)
{
    if (p.size() != q.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
    if (!h.shared() && h.lengthscales.size() != p.size()) {
        throw std::invalid_argument("kernel_eval: lengthscale count does not match dimension");
    }
    double s = 0.0;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
        const double r = (p[d] - q[d]) / h.lengthscale(static_cast<int>(d));
        s += r * r;
    }
    return h.signal_var * std::exp(-0.5 * s);
}

double kernel_eval(const JointPoint& p, const JointPoint& q, const GpHyperparams& h)
{
    if (p.dim_x() != q.dim_x() || p.dim_a() != q.dim_a()) {
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    }
    return kernel_eval(p.joined(), q.joined(), h);
}

Matrix kernel_matrix(const Matrix& p, const Matrix& q, const GpHyperparams& h)
{
    Matrix k(p.rows(), q.rows());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.rows(); ++j) {
            k(i, j) = kernel_eval(Vector(p.row(i).transpose()), Vector(q.row(j).transpose()), h);
        }
    }
    return k;
}

Matrix cholesky_with_jitter(const Matrix& a, double scale, double* jitter_used)
{
    static constexpr double kLadder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    for (double rel : kLadder) {
        const double jitter = rel * scale;
        Matrix m = a;
        m.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(m);
        if (llt.info() != Eigen::Success) continue;
        Matrix l = llt.matrixL();
        bool ok = true;
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            if (!(std::isfinite(l(i, i)) && l(i, i) > 0.0)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (jitter_used) *jitter_used = jitter;
        return l;
    }
    throw NumericError("Cholesky factorisation failed even with maximum jitter");
}

namespace {

double sample_mean(const Vector& y)
{
    return y.size() ? y.mean() : 0.0;
}

} // namespace

GpPosterior GpPosterior::fit(const SimulationDataset& data, const GpHyperparams& hyper)
{
    return fit(data, hyper, sample_mean(data.outputs()));
}

GpPosterior GpPosterior::fit(const SimulationDataset& data, const GpHyperparams& hyper,
                             double prior_mean)
{
    if (data.empty()) throw std::invalid_argument("GpPosterior::fit: empty dataset");
    hyper.validate(data.dim_x() + data.dim_a());

    GpPosterior g;
    g.data_ = data;
    g.hyper_ = hyper;
    g.prior_mean_ = prior_mean;
    g.dim_x_ = data.dim_x();
    g.dim_a_ = data.dim_a();
    g.inputs_ = data.inputs();

    Matrix k = kernel_matrix(g.inputs_, g.inputs_, hyper);
    k.diagonal().array() += hyper.noise_var;
    g.chol_ = cholesky_with_jitter(k, hyper.signal_var, &g.jitter_);

    const Vector resid = data.outputs().array() - prior_mean;
    g.weights_ = g.solve(resid);
    return g;
}

GpPosterior GpPosterior::prior(int dim_x, int dim_a, const GpHyperparams& hyper, double prior_mean)
{
    hyper.validate(dim_x + dim_a);
    GpPosterior g;
    g.data_ = SimulationDataset(dim_x, dim_a);
    g.hyper_ = hyper;
    g.prior_mean_ = prior_mean;
    g.dim_x_ = dim_x;
    g.dim_a_ = dim_a;
    g.inputs_ = Matrix(0, dim_x + dim_a);
    g.chol_ = Matrix(0, 0);
    g.weights_ = Vector(0);
    return g;
}

Vector GpPosterior::cross(const Vector& p) const
{
    if (p.size() != inputs_.cols()) throw std::invalid_argument("GpPosterior: dimension mismatch");
    Vector c(inputs_.rows());
    const auto dims = inputs_.cols();
    for (Eigen::Index i = 0; i < inputs_.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index d = 0; d < dims; ++d) {
            const double r = (inputs_(i, d) - p[d]) / hyper_.lengthscale(static_cast<int>(d));
            s += r * r;
        }
        c[i] = hyper_.signal_var * std::exp(-0.5 * s);
    }
    return c;
}

Vector GpPosterior::solve(const Vector& v) const
{
    if (chol_.rows() == 0) return Vector(0);
    const auto l = chol_.triangularView<Eigen::Lower>();
    Vector z = l.solve(v);
    return l.transpose().solve(z);
}

double GpPosterior::mean(const Vector& joined) const
{
    const Vector c = cross(joined);
    return prior_mean_ + (c.size() ? c.dot(weights_) : 0.0);
}

double GpPosterior::covariance(const Vector& p, const Vector& q) const
{
    const double prior = kernel_eval(p, q, hyper_);
    if (size() == 0) return prior;
    const auto l = chol_.triangularView<Eigen::Lower>();
    const Vector vp = l.solve(cross(p));
    const Vector vq = l.solve(cross(q));
    return prior - vp.dot(vq);
}

double GpPosterior::covariance(const JointPoint& p, const JointPoint& q) const
{
    return covariance(p.joined(), q.joined());
}

double GpPosterior::variance(const Vector& p) const
{
    return std::max(0.0, covariance(p, p));
}

GpPosterior::Predictive GpPosterior::predictive_y(const JointPoint& p) const
{
    const Vector j = p.joined();
    return {mean(j), variance(j) + hyper_.noise_var + jitter_};
}

GpPosterior::SigmaTilde::SigmaTilde(const GpPosterior& gp, const Vector& next)
    : gp_(&gp), next_(next)
{
    solved_ = gp.solve(gp.cross(next));
    const double noise = gp.hyper_.noise_var + gp.jitter_;
    const double var = gp.variance(next);
    // Noise-free model at an already observed input: the observation carries no information.
    if (noise == 0.0 && var <= 1e-9 * gp.hyper_.signal_var) {
        denom_ = 0.0;
    } else {
        denom_ = std::sqrt(var + noise);
    }
}

double GpPosterior::SigmaTilde::operator()(const Vector& p) const
{
    if (denom_ == 0.0) return 0.0;
    double kn = kernel_eval(p, next_, gp_->hyper_);
    if (solved_.size()) kn -= gp_->cross(p).dot(solved_);
    return kn / denom_;
}

double GpPosterior::sigma_tilde(const JointPoint& p, const JointPoint& next) const
{
    return SigmaTilde(*this, next.joined())(p.joined());
}

// ---------------------------------------------------------------------------
// Marginal likelihood

namespace {

/// Caches per-dimension squared distances so repeated likelihood evaluations only pay for
/// the exponentials and the factorisation.
class LmlEvaluator {
public:
    LmlEvaluator(const SimulationDataset& data, double prior_mean)
    {
        const Matrix x = data.inputs();
        n_ = static_cast<int>(x.rows());
        dims_ = static_cast<int>(x.cols());
        sq_.resize(dims_);
        for (int d = 0; d < dims_; ++d) {
            sq_[d].resize(n_, n_);
            for (int i = 0; i < n_; ++i) {
                for (int j = 0; j < n_; ++j) {
                    const double r = x(i, d) - x(j, d);
                    sq_[d](i, j) = r * r;
                }
            }
        }
        resid_ = data.outputs().array() - prior_mean;
    }

    /// Returns -inf when the factorisation fails.
    double operator()(const GpHyperparams& h) const
    {
        Matrix scaled = Matrix::Zero(n_, n_);
        for (int d = 0; d < dims_; ++d) {
            const double l = h.lengthscale(d);
            scaled += sq_[d] / (l * l);
        }
        Matrix k = h.signal_var * (-0.5 * scaled.array()).exp().matrix();
        k.diagonal().array() += h.noise_var;
        Matrix l;
        try {
            l = cholesky_with_jitter(k, h.signal_var);
        } catch (const NumericError&) {
            return -std::numeric_limits<double>::infinity();
        }
        const Vector z = l.triangularView<Eigen::Lower>().solve(resid_);
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        return -0.5 * z.squaredNorm() - 0.5 * log_det -
               0.5 * n_ * std::log(2.0 * std::numbers::pi);
    }

private:
    int n_ = 0;
    int dims_ = 0;
    std::vector<Matrix> sq_;
    Vector resid_;
};

} // namespace

double log_marginal_likelihood(const SimulationDataset& data, const GpHyperparams& hyper)
{
    return log_marginal_likelihood(data, hyper, sample_mean(data.outputs()));
}

double log_marginal_likelihood(const SimulationDataset& data, const GpHyperparams& hyper,
                               double prior_mean)
{
    if (data.empty()) throw std::invalid_argument("log_marginal_likelihood: empty dataset");
    hyper.validate(data.dim_x() + data.dim_a());
    const double v = LmlEvaluator(data, prior_mean)(hyper);
    if (!std::isfinite(v)) throw NumericError("log_marginal_likelihood: Gram matrix not positive definite");
    return v;
}

bool HyperBounds::contains(const GpHyperparams& h) const
{
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(h.signal_var, signal_lo, signal_hi) || !in(h.noise_var, noise_lo, noise_hi)) return false;
    if (h.lengthscales.size() != length_lo.size()) return false;
    for (Eigen::Index d = 0; d < length_lo.size(); ++d) {
        if (!in(h.lengthscales[d], length_lo[d], length_hi[d])) return false;
    }
    return true;
}

GpHyperparams HyperBounds::midpoint() const
{
    GpHyperparams h;
    h.signal_var = std::sqrt(signal_lo * signal_hi);
    h.noise_var = std::sqrt(noise_lo * noise_hi);
    h.lengthscales = (length_lo.array() * length_hi.array()).sqrt().matrix();
    return h;
}

HyperBounds default_hyper_bounds(const SimulationDataset& data, bool shared_lengthscale)
{
    const Vector y = data.outputs();
    double var = 0.0;
    if (y.size() > 1) var = (y.array() - y.mean()).square().mean();
    if (!(var > 0.0)) var = 1.0;

    const Matrix x = data.inputs();
    const auto dims = static_cast<int>(x.cols());
    Vector range(dims);
    for (int d = 0; d < dims; ++d) {
        const double r = x.rows() ? x.col(d).maxCoeff() - x.col(d).minCoeff() : 0.0;
        range[d] = r > 0.0 ? r : 1.0;
    }

    HyperBounds b;
    b.signal_lo = 1e-3 * var;
    b.signal_hi = 1e3 * var;
    b.noise_lo = 1e-3 * var;
    b.noise_hi = 1e3 * var;
    if (shared_lengthscale) {
        b.length_lo = Vector::Constant(1, 1e-3 * range.maxCoeff());
        b.length_hi = Vector::Constant(1, 1e3 * range.maxCoeff());
    } else {
        b.length_lo = 1e-3 * range;
        b.length_hi = 1e3 * range;
    }
    return b;
}

namespace {

Vector to_log_params(const GpHyperparams& h)
{
    Vector v(h.lengthscales.size() + 2);
    v[0] = std::log(h.signal_var);
    v.segment(1, h.lengthscales.size()) = h.lengthscales.array().log().matrix();
    v[v.size() - 1] = std::log(h.noise_var);
    return v;
}

GpHyperparams from_log_params(const Vector& v)
{
    GpHyperparams h;
    h.signal_var = std::exp(v[0]);
    h.lengthscales = v.segment(1, v.size() - 2).array().exp().matrix();
    h.noise_var = std::exp(v[v.size() - 1]);
    return h;
}

} // namespace

HyperFit fit_hyperparameters(const SimulationDataset& data, const HyperBounds& bounds, Rng& rng,
                             const HyperFitOptions& opts, const std::vector<GpHyperparams>& seeds)
{
    if (data.empty()) throw std::invalid_argument("fit_hyperparameters: empty dataset");
    const int joint = data.dim_x() + data.dim_a();
    if (!bounds.shared() && bounds.length_lo.size() != joint) {
        throw std::invalid_argument("fit_hyperparameters: lengthscale bounds do not match dimension");
    }
    auto positive_finite = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive_finite(bounds.signal_lo) || !positive_finite(bounds.signal_hi) ||
        !positive_finite(bounds.noise_lo) || !positive_finite(bounds.noise_hi) ||
        !(bounds.length_lo.array() > 0.0).all() || !bounds.length_hi.allFinite()) {
        throw std::invalid_argument("fit_hyperparameters: bounds must be finite and positive");
    }

    GpHyperparams lo_h{bounds.signal_lo, bounds.length_lo, bounds.noise_lo};
    GpHyperparams hi_h{bounds.signal_hi, bounds.length_hi, bounds.noise_hi};
    const BoxBounds box(to_log_params(lo_h), to_log_params(hi_h));

    const LmlEvaluator lml(data, sample_mean(data.outputs()));
    auto objective = [&](const Vector& v) { return lml(from_log_params(v)); };

    std::vector<Vector> starts{to_log_params(bounds.midpoint())};
    for (const auto& s : seeds) {
        if (s.lengthscales.size() == bounds.length_lo.size()) starts.push_back(box.clip(to_log_params(s)));
    }

    NelderMeadOptions nm;
    nm.max_evals = opts.max_evals;
    const OptimResult best = multistart_max(objective, box, std::max(1, opts.restarts), rng, starts, nm);

    HyperFit fit;
    if (!std::isfinite(best.value)) {
        fit.hyper = bounds.midpoint();
        fit.log_likelihood = -std::numeric_limits<double>::infinity();
        fit.fell_back = true;
        return fit;
    }
    fit.hyper = from_log_params(box.clip(best.x));
    fit.log_likelihood = best.value;
    return fit;
}

} // namespace bico
