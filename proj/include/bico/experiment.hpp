#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bico/bico_loop.hpp"
#include "bico/problem.hpp"

namespace bico {

/// Version string embedded in every result file.
const char* version_tag();

using Interval = std::array<double, 2>;

struct ExperimentConfig {
    /// newsvendor, gp_1d, gp_2d, or gp_1d_irrelevant (GP test function that ignores a).
    std::string testbed = "newsvendor";
    std::uint64_t seed = 0;
    /// bico, fixed_fraction, or random.
    std::string algorithm = "bico";
    double p = 0.0;
    int replications = 100;

    double budget = 50.0;
    double sim_cost = 1.0;
    int n_init = 10;
    /// One entry per source.
    std::vector<double> source_costs{1.0};
    std::vector<double> source_noise_var{10.0};

    struct Acquisition {
        int n_a_samples = 100;
        int n_r = 30;
        int grid_per_dim = 100;
        int restarts = 10;
        int max_evals = 100;
        int recommend_restarts = 2;
        bool operator==(const Acquisition&) const = default;
    } acquisition;

    struct Hyper {
        int init_restarts = 10;
        int refit_restarts = 2;
        int max_evals = 150;
        bool shared_lengthscale = true;
        bool operator==(const Hyper&) const = default;
    } hyper;

    struct Newsvendor {
        double price = 5.0;
        double cost = 3.0;
        double demand_var = 10.0;
        double true_mean = 40.0;
        Interval x_bounds{0.0, 100.0};
        Interval a_bounds{0.0, 100.0};
        bool operator==(const Newsvendor&) const = default;
    } newsvendor;

    struct GpTestfunc {
        double lengthscale = 10.0;
        double signal_var = 1.0;
        double noise_var = 0.01;
        int n_anchor = 400;
        Interval x_bounds{0.0, 100.0};
        /// Applied to every parameter coordinate.
        Interval a_bounds{0.0, 100.0};
        bool operator==(const GpTestfunc&) const = default;
    } gp_testfunc;

    bool operator==(const ExperimentConfig&) const = default;

    [[nodiscard]] int n_sources() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Parses a config document. Missing keys take defaults, some of which depend on the testbed
/// (budget, n_anchor, lengthscale sharing, per-source arrays); unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Fully resolved document; parse_config(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
/// BICO_SEED, when set, replaces the master seed.
void apply_env_overrides(ExperimentConfig& cfg);

/// Seed of replication i: mix_seed(master, i).
std::uint64_t replication_seed(const ExperimentConfig& cfg, int rep);

/// The problem instance of replication `rep`. GP test functions depend on the replication seed
/// only, so every algorithm sees the same instance for a given replication.
Problem build_problem(const ExperimentConfig& cfg, int rep);
LoopConfig loop_config(const ExperimentConfig& cfg);

struct ReplicationResult {
    int rep = 0;
    std::uint64_t seed = 0;
    double oc = 0.0;
    int m_final = 0;
    RunResult run;
    TruthOracle truth;
};

ReplicationResult run_replication(const ExperimentConfig& cfg, int rep);

nlohmann::json replication_to_json(const ExperimentConfig& cfg, const ReplicationResult& r);
/// Iteration log, one row per iteration: t, action_type, x..., a..., s, r, y, voi_sim, voi_src,
/// x_r..., oc, b. Empty cells for fields that do not apply.
void write_iteration_csv(std::ostream& os, const ReplicationResult& r, int dim_x, int dim_a);

struct ExperimentSummary {
    int completed = 0;
    int skipped = 0; // already present on disk
    int failed = 0;
};

/// Runs every replication not already completed in `out_dir` (files rep_NNNN.json / .csv; a
/// failure leaves rep_NNNN.failed.json instead). Output does not depend on `workers`.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int workers,
                                 std::ostream* progress = nullptr);

struct GroupSummary {
    std::string algorithm;
    std::optional<double> p; // fixed_fraction only
    int n = 0;
    int failed = 0;
    double mean_oc = 0.0;
    std::optional<double> oc_ci; // 95% half-width 1.96 sd / sqrt(n); empty for n = 1
    double mean_m = 0.0;
    std::optional<double> m_ci;
};

struct AggregateReport {
    /// Sorted by algorithm, then p.
    std::vector<GroupSummary> groups;
};

/// Aggregates every rep_*.json under `dir` (recursively), grouped by (algorithm, p). Throws
/// std::runtime_error when none is found.
AggregateReport build_report(const std::filesystem::path& dir);

/// Summary table as csv or json.
void write_report(const AggregateReport& report, const std::string& format, std::ostream& os);
/// Plot data: oc_vs_m.csv (fixed-fraction curve, raw OC; apply the log axis when plotting) and
/// bico_band.csv (BICO mean OC and mean m with their half-widths).
void write_plot_data(const AggregateReport& report, const std::filesystem::path& dir);

} // namespace bico
