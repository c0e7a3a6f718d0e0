#include "bico/inner_optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bico {

std::vector<Vector> lhs_sample(int n, const BoxBounds& box, Rng& rng)
{
    if (n < 0) throw std::invalid_argument("lhs_sample: n must be >= 0");
    std::vector<Vector> points(n, Vector(box.dim()));
    if (n == 0) return points;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> perm(n);
    for (int d = 0; d < box.dim(); ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const double bin = box.width(d) / n;
        for (int i = 0; i < n; ++i) {
            // u in [0,1) keeps the point inside its half-open bin.
            double v = box.lo(d) + (perm[i] + unit(rng)) * bin;
            points[i][d] = std::min(v, box.hi(d));
        }
    }
    return points;
}

namespace {

double finite_or_inf(double v)
{
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

} // namespace

OptimResult nelder_mead_max(const Objective& f, const BoxBounds& box, const Vector& start,
                            const NelderMeadOptions& opts)
{
    const int dim = box.dim();
    if (start.size() != dim) throw std::invalid_argument("nelder_mead_max: start dimension mismatch");

    int evals = 0;
    // Minimise the negated objective; -inf objective (or NaN) becomes +inf cost.
    auto cost = [&](const Vector& v) {
        ++evals;
        return finite_or_inf(-f(v));
    };

    std::vector<Vector> simplex;
    std::vector<double> fv;
    simplex.reserve(dim + 1);
    simplex.push_back(box.clip(start));
    for (int d = 0; d < dim; ++d) {
        Vector v = simplex.front();
        const double step = opts.initial_step * box.width(d);
        v[d] = (v[d] + step <= box.hi(d)) ? v[d] + step : v[d] - step;
        simplex.push_back(box.clip(v));
    }
    for (const auto& v : simplex) {
        fv.push_back(cost(v));
    }

    std::vector<int> order(dim + 1);
    auto sort_simplex = [&]() {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return fv[i] < fv[j]; });
        std::vector<Vector> s2;
        std::vector<double> f2;
        s2.reserve(dim + 1);
        f2.reserve(dim + 1);
        for (int i : order) {
            s2.push_back(std::move(simplex[i]));
            f2.push_back(fv[i]);
        }
        simplex.swap(s2);
        fv.swap(f2);
    };

    auto converged = [&]() {
        double diam = 0.0;
        for (int j = 1; j <= dim; ++j) {
            for (int d = 0; d < dim; ++d) {
                diam = std::max(diam, std::abs(simplex[j][d] - simplex[0][d]) / box.width(d));
            }
        }
        return diam < opts.relative_diameter_tol;
    };

    while (evals < opts.max_evals) {
        sort_simplex();
        if (converged()) break;

        Vector centroid = Vector::Zero(dim);
        for (int j = 0; j < dim; ++j) centroid += simplex[j];
        centroid /= dim;

        const Vector& worst = simplex[dim];
        Vector xr = box.clip(centroid + opts.reflection * (centroid - worst));
        const double fr = cost(xr);

        if (fr < fv[0]) {
            Vector xe = box.clip(centroid + opts.expansion * (xr - centroid));
            const double fe = evals < opts.max_evals ? cost(xe) : std::numeric_limits<double>::infinity();
            if (fe < fr) {
                simplex[dim] = std::move(xe);
                fv[dim] = fe;
            } else {
                simplex[dim] = std::move(xr);
                fv[dim] = fr;
            }
        } else if (fr < fv[dim - 1]) {
            simplex[dim] = std::move(xr);
            fv[dim] = fr;
        } else {
            const bool outside = fr < fv[dim];
            Vector xc = outside ? Vector(centroid + opts.contraction * (xr - centroid))
                                : Vector(centroid + opts.contraction * (worst - centroid));
            xc = box.clip(xc);
            if (evals >= opts.max_evals) break;
            const double fc = cost(xc);
            if (fc < (outside ? fr : fv[dim])) {
                simplex[dim] = std::move(xc);
                fv[dim] = fc;
            } else {
                for (int j = 1; j <= dim && evals < opts.max_evals; ++j) {
                    simplex[j] = box.clip(simplex[0] + opts.shrink * (simplex[j] - simplex[0]));
                    fv[j] = cost(simplex[j]);
                }
            }
        }
    }

    const auto best = std::min_element(fv.begin(), fv.end()) - fv.begin();
    OptimResult result;
    result.x = simplex[best];
    result.value = std::isfinite(fv[best]) ? -fv[best] : -std::numeric_limits<double>::infinity();
    result.evaluations = evals;
    return result;
}

OptimResult multistart_max(const Objective& f, const BoxBounds& box, int n_starts, Rng& rng,
                           const std::vector<Vector>& seeds, const NelderMeadOptions& opts)
{
    if (n_starts < 1) throw std::invalid_argument("multistart_max: n_starts must be >= 1");

    const std::uint64_t base = rng();
    std::vector<Vector> starts;
    starts.reserve(seeds.size() + n_starts);
    for (const auto& s : seeds) starts.push_back(box.clip(s));
    for (int i = 0; i < n_starts; ++i) {
        Rng start_rng(mix_seed(base, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector v(box.dim());
        for (int d = 0; d < box.dim(); ++d) v[d] = box.lo(d) + unit(start_rng) * box.width(d);
        starts.push_back(std::move(v));
    }

    OptimResult best;
    best.value = -std::numeric_limits<double>::infinity();
    best.x = starts.front();
    int total = 0;
    for (const auto& s : starts) {
        OptimResult r = nelder_mead_max(f, box, s, opts);
        total += r.evaluations;
        if (r.value > best.value) best = std::move(r);
    }
    best.evaluations = total;
    return best;
}

std::pair<int, double> discrete_max(const Objective& f, const std::vector<Vector>& points)
{
    int best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double v = f(points[i]);
        if (std::isfinite(v) && (best < 0 || v > best_value)) {
            best = static_cast<int>(i);
            best_value = v;
        }
    }
    return {best, best_value};
}

} // namespace bico
