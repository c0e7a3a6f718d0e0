#pragma once

#include <optional>
#include <vector>

#include "bico/acquisition.hpp"
#include "bico/common.hpp"
#include "bico/gp_surrogate.hpp"
#include "bico/parameter_posterior.hpp"
#include "bico/problem.hpp"

namespace bico {

struct Action {
    enum class Kind { Simulate, QuerySource };

    Kind kind = Kind::Simulate;
    JointPoint point; // Simulate only
    int source = -1;  // QuerySource only

    static Action simulate(JointPoint p) { return {Kind::Simulate, std::move(p), -1}; }
    static Action query(int s) { return {Kind::QuerySource, {}, s}; }
    [[nodiscard]] bool is_simulate() const { return kind == Kind::Simulate; }
};

class BudgetLedger {
public:
    explicit BudgetLedger(double total);

    void charge(double cost);
    [[nodiscard]] double total() const { return total_; }
    [[nodiscard]] double consumed() const { return consumed_; }
    [[nodiscard]] bool exhausted() const { return consumed_ >= total_; }

private:
    double total_;
    double consumed_ = 0.0;
};

struct IterationLog {
    int t = 0;
    Action action;
    double observed = 0.0;
    /// Maxima of the two values of information; NaN when not computed (forced actions, or no
    /// sources declared).
    double voi_sim = 0.0;
    double voi_src = 0.0;
    Vector x_r;
    /// NaN without a truth oracle.
    double oc = 0.0;
    double b = 0.0;
};

struct LoopConfig {
    double budget = 50.0;
    double sim_cost = 1.0;
    int n_init = 10;
    AcquisitionOptions acq;
    /// Search effort for the first fit and for the warm-started refits after each simulation.
    HyperFitOptions hyper_init{10, 150};
    HyperFitOptions hyper_refit{2, 150};
    bool shared_lengthscale = true;
    /// Source observations available before the first iteration (free of charge).
    SourceDataset preloaded;

    /// Throws ConfigError naming the offending field.
    void validate(const Problem& problem) const;
};

struct RunResult {
    Vector x_r;
    std::vector<IterationLog> log;
    int m_final = 0;
    /// NaN without a truth oracle.
    double oc = 0.0;
    SimulationDataset simulations;
    SourceDataset source_data;
    GpHyperparams hyper;
};

/// The budgeted value-of-information loop: after n_init Latin-hypercube simulations (charged to
/// the budget), every iteration takes the larger of the best simulation value and the best
/// source value (ties go to simulation) until the budget is spent.
RunResult run_bico(const LoopConfig& cfg, const Problem& problem, Rng& rng);

/// Spends floor(B p) on source queries round-robin across sources (capped by what is left after
/// initialisation), then samples the simulator by the simulation value alone.
RunResult run_fixed_fraction(double p, const LoopConfig& cfg, const Problem& problem, Rng& rng);

/// Uniform random simulation points, no source queries.
RunResult run_random(const LoopConfig& cfg, const Problem& problem, Rng& rng);

} // namespace bico
