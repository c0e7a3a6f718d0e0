#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bico/normal.hpp"
#include "bico/parameter_posterior.hpp"
#include "oracles.hpp"

using namespace bico;

namespace {

const BoxBounds kBox{{0.0, 100.0}};

SourceSpec source(double noise = 10.0)
{
    SourceSpec s;
    s.id = 0;
    s.target_dim = 0;
    s.obs_noise_var = noise;
    return s;
}

SourceDataset observations(std::initializer_list<double> rs)
{
    SourceDataset d;
    for (double r : rs) d.add(0, r);
    return d;
}

Vector scalar(double v)
{
    return Vector::Constant(1, v);
}

} // namespace

TEST_SUITE("parameter_posterior") {

TEST_CASE("no data gives the uniform prior")
{
    const auto post = update_posterior({source()}, {}, kBox);
    CHECK(post.pdf(scalar(37.0)) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(post.log_pdf(scalar(-1.0)) == -INFINITY);
    CHECK(post.log_pdf(scalar(100.5)) == -INFINITY);

    const BoxBounds box2{{0.0, 100.0}, {0.0, 100.0}};
    SourceSpec s1 = source();
    s1.id = 1;
    s1.target_dim = 1;
    const auto post2 = update_posterior({source(), s1}, {}, box2);
    Vector a(2);
    a << 10.0, 90.0;
    CHECK(post2.log_pdf(a) == doctest::Approx(std::log(1e-4)).epsilon(1e-14));
}

TEST_CASE("two observations give the conjugate truncated Gaussian")
{
    const auto post = update_posterior({source()}, observations({38.0, 42.0}), kBox);
    const auto& d = post.dimension(0);
    CHECK(d.has_data);
    CHECK(d.mean == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(d.var == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(std::abs(d.log_norm) < 1e-10);
}

TEST_CASE("single observation peak density")
{
    const auto post = update_posterior({source()}, observations({40.0}), kBox);
    CHECK(post.pdf(scalar(40.0)) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi * 10.0)).epsilon(1e-10));
}

TEST_CASE("truncated density matches a quadrature-normalised oracle")
{
    // Observations near the edge so the truncation matters.
    const auto post = update_posterior({source(30.0)}, observations({2.0, -1.0, 4.0}), kBox);
    const auto& d = post.dimension(0);
    for (double a : {0.0, 0.5, 3.0, 10.0, 25.0}) {
        CHECK(std::abs(post.pdf(scalar(a)) - oracle::truncated_pdf_by_quadrature(a, d.mean, d.var, 0.0, 100.0)) <= 1e-6);
    }
    const double total = oracle::simpson([&](double a) { return post.pdf(scalar(a)); }, 0.0, 100.0, 20000);
    CHECK(std::abs(total - 1.0) <= 1e-6);
}

TEST_CASE("far-tail truncation stays finite and normalised")
{
    const auto post = update_posterior({source(1.0)}, observations({-60.0, -60.0}), kBox);
    const double total = oracle::simpson([&](double a) { return post.pdf(scalar(a)); }, 0.0, 100.0, 200000);
    CHECK(std::isfinite(post.log_pdf(scalar(0.0))));
    CHECK(std::abs(total - 1.0) <= 1e-3);
    Rng rng(1);
    for (const auto& a : post.sample(200, rng)) {
        CHECK(a[0] >= 0.0);
        CHECK(a[0] <= 0.5);
    }
}

TEST_CASE("uniform samples pass a KS test")
{
    Rng rng(42);
    const auto post = update_posterior({source()}, {}, kBox);
    std::vector<double> xs;
    for (const auto& a : post.sample(2000, rng)) {
        CHECK(kBox.contains(a));
        xs.push_back(a[0]);
    }
    CHECK(oracle::ks_statistic(xs, [](double x) { return x / 100.0; }) < oracle::ks_critical_01(2000));
}

TEST_CASE("truncated samples: in box, KS and mean")
{
    Rng rng(7);
    const auto post = update_posterior({source(40.0)}, observations({3.0}), kBox);
    const auto& d = post.dimension(0);
    const int n = 4000;
    std::vector<double> xs;
    double sum = 0.0;
    for (const auto& a : post.sample(n, rng)) {
        CHECK(kBox.contains(a));
        xs.push_back(a[0]);
        sum += a[0];
    }
    CHECK(oracle::ks_statistic(xs, [&](double x) { return d.cdf(x); }) < oracle::ks_critical_01(n));

    // Truncated-normal moments from quadrature.
    const double m = oracle::simpson([&](double a) { return a * d.pdf(a); }, 0.0, 100.0, 20000);
    const double m2 = oracle::simpson([&](double a) { return a * a * d.pdf(a); }, 0.0, 100.0, 20000);
    const double sd = std::sqrt(m2 - m * m);
    CHECK(std::abs(sum / n - m) <= 4.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(d.truncated_mean() == doctest::Approx(m).epsilon(1e-8));
}

TEST_CASE("predictive draws: delta-like posterior")
{
    Rng rng(5);
    ParameterPosterior post(kBox, {DimensionBelief::truncated_gaussian(40.0, 1e-12, 0.0, 100.0)});
    const int n = 10000;
    std::vector<double> rs;
    for (int i = 0; i < n; ++i) {
        rs.push_back(predictive_sample(source(10.0), post, rng));
        CHECK(std::isfinite(rs.back()));
    }
    const auto ms = oracle::mean_se(rs);
    CHECK(std::abs(ms.mean - 40.0) <= 3.0 * ms.se);
    double ss = 0.0;
    for (double r : rs) ss += (r - ms.mean) * (r - ms.mean);
    const double var = ss / (n - 1);
    // sd of the sample variance is about sqrt(2/n) * 10.
    CHECK(std::abs(var - 10.0) <= 3.0 * std::sqrt(2.0 / n) * 10.0);
}

TEST_CASE("predictive draws: uniform posterior with tiny noise is uniform")
{
    Rng rng(6);
    const auto post = update_posterior({source()}, {}, kBox);
    std::vector<double> rs;
    for (int i = 0; i < 2000; ++i) rs.push_back(predictive_sample(source(1e-12), post, rng));
    CHECK(oracle::ks_statistic(rs, [](double x) { return std::clamp(x / 100.0, 0.0, 1.0); }) <
          oracle::ks_critical_01(2000));
}

TEST_CASE("importance weights")
{
    const auto specs = std::vector<SourceSpec>{source()};
    const auto d_old = observations({35.0});
    CHECK(importance_weight(scalar(33.0), d_old, d_old, specs, kBox) == 1.0);

    // uniform -> truncated, against the direct ratio.
    const auto d_new = observations({60.0});
    for (double a : {0.5, 30.0, 60.0, 99.0}) {
        const double want = oracle::truncated_pdf_by_quadrature(a, 60.0, 10.0, 0.0, 100.0) / 0.01;
        const double got = importance_weight(scalar(a), SourceDataset{}, d_new, specs, kBox);
        CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, want));
    }

    // Mean weight under the old posterior is 1.
    Rng rng(12);
    const auto old_post = update_posterior(specs, d_old, kBox);
    auto extended = d_old;
    extended.add(0, 39.0);
    const auto new_post = update_posterior(specs, extended, kBox);
    std::vector<double> ws;
    for (const auto& a : old_post.sample(2000, rng)) ws.push_back(importance_weight(a, old_post, new_post));
    const auto ms = oracle::mean_se(ws);
    CHECK(std::abs(ms.mean - 1.0) <= 3.0 * ms.se);

    CHECK_THROWS_AS(importance_weight(scalar(150.0), old_post, new_post), std::invalid_argument);
}

TEST_CASE("variance shrinks as sigma^2 / m and order does not matter")
{
    const auto specs = std::vector<SourceSpec>{source(10.0)};
    SourceDataset d;
    double prev = INFINITY;
    for (int m = 1; m <= 20; ++m) {
        d.add(0, 40.0 + (m % 3) - 1.0);
        const auto post = update_posterior(specs, d, kBox);
        CHECK(post.dimension(0).var == doctest::Approx(10.0 / m).epsilon(1e-12));
        CHECK(post.dimension(0).var < prev);
        prev = post.dimension(0).var;
    }
    const auto a = update_posterior(specs, observations({1.0, 50.0, 7.0}), kBox);
    const auto b = update_posterior(specs, observations({7.0, 1.0, 50.0}), kBox);
    CHECK(a.dimension(0).mean == doctest::Approx(b.dimension(0).mean).epsilon(1e-14));
    CHECK(a.dimension(0).var == b.dimension(0).var);
}

TEST_CASE("posterior concentrates around the truth")
{
    int within = 0;
    int mass_ok = 0;
    const auto specs = std::vector<SourceSpec>{source(10.0)};
    for (int rep = 0; rep < 200; ++rep) {
        Rng rng(1000 + rep);
        std::normal_distribution<double> noise(40.0, std::sqrt(10.0));
        SourceDataset d;
        for (int i = 0; i < 1000; ++i) d.add(0, noise(rng));
        const auto post = update_posterior(specs, d, kBox);
        if (std::abs(post.dimension(0).truncated_mean() - 40.0) <= 4.0 * std::sqrt(10.0 / 1000.0)) ++within;
        if (post.mass(scalar(39.0), scalar(41.0)) >= 0.99) ++mass_ok;
    }
    CHECK(within >= 198);
    CHECK(mass_ok >= 198);
}

TEST_CASE("undeclared sources and bad targets are rejected")
{
    SourceDataset d;
    d.add(3, 1.0);
    CHECK_THROWS_AS(update_posterior({source()}, d, kBox), std::invalid_argument);
    SourceSpec bad = source();
    bad.target_dim = 2;
    CHECK_THROWS_AS(update_posterior({bad}, {}, kBox), std::invalid_argument);
}

} // TEST_SUITE
