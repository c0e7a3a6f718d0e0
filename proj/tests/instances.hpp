#pragma once

// Seeded random problem instances over X = A = [0, 100] shared by unit and acceptance tests.

#include <cmath>
#include <random>

#include "bico/acquisition.hpp"

namespace instances {

using namespace bico;

struct Instance {
    SimulationDataset data{1, 1};
    GpHyperparams hyper;
    std::vector<SourceSpec> specs;
    SourceDataset sources;
    ParameterPosterior post;
    BoxBounds x_box{{0.0, 100.0}};
    BoxBounds a_box{{0.0, 100.0}};
};

/// A smooth response that depends on both x and a, observed at n random points, with 0-3 source
/// observations around a random true parameter.
inline Instance make(std::uint64_t seed, int n = 8)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::normal_distribution<double> z(0.0, 1.0);
    Instance inst;
    const double phase = u(rng) / 10.0;
    const double shift = u(rng);
    for (int i = 0; i < n; ++i) {
        const double x = u(rng);
        const double a = u(rng);
        const double y = std::sin(x / 15.0 + phase) * std::cos((a - shift) / 30.0) + 0.5 * std::sin(a / 25.0) +
                         0.1 * z(rng);
        inst.data.add({Vector::Constant(1, x), Vector::Constant(1, a)}, y);
    }
    inst.hyper.signal_var = 0.5 + u(rng) / 100.0;
    inst.hyper.lengthscales = Vector::Constant(1, 15.0 + u(rng) / 5.0);
    inst.hyper.noise_var = 0.01;

    SourceSpec spec;
    spec.id = 0;
    spec.target_dim = 0;
    spec.obs_noise_var = 10.0 + u(rng);
    spec.cost = 1.0;
    inst.specs = {spec};
    const double a_star = u(rng);
    const int m = static_cast<int>(u(rng) / 25.0);
    std::normal_distribution<double> obs(a_star, std::sqrt(spec.obs_noise_var));
    for (int i = 0; i < m; ++i) inst.sources.add(0, obs(rng));
    inst.post = update_posterior(inst.specs, inst.sources, inst.a_box);
    return inst;
}

} // namespace instances
