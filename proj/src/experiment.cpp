#include "bico/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "bico/testbeds.hpp"

#ifndef BICO_VERSION
#define BICO_VERSION "0.0.0"
#endif

namespace bico {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version_tag()
{
    return "bico " BICO_VERSION;
}

// --- Configuration ---------------------------------------------------------------------------

namespace {

const std::set<std::string> kTestbeds{"newsvendor", "gp_1d", "gp_2d", "gp_1d_irrelevant"};
const std::set<std::string> kAlgorithms{"bico", "fixed_fraction", "random"};

int sources_for(const std::string& testbed)
{
    return testbed == "gp_2d" ? 2 : 1;
}

ExperimentConfig defaults_for(const std::string& testbed)
{
    ExperimentConfig cfg;
    cfg.testbed = testbed;
    const int ns = sources_for(testbed);
    cfg.source_costs.assign(ns, 1.0);
    cfg.source_noise_var.assign(ns, 10.0);
    if (testbed == "gp_1d") {
        cfg.budget = 100.0;
        cfg.gp_testfunc.n_anchor = 400;
    } else if (testbed == "gp_2d") {
        cfg.budget = 100.0;
        cfg.gp_testfunc.n_anchor = 2000;
    } else if (testbed == "gp_1d_irrelevant") {
        cfg.budget = 50.0;
        cfg.gp_testfunc.n_anchor = 60;
        cfg.hyper.shared_lengthscale = false;
    }
    return cfg;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix)
{
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key: " + prefix + key);
    }
}

const json& object_at(const json& doc, const std::string& key, const std::string& path)
{
    const json& v = doc.at(key);
    if (!v.is_object()) throw ConfigError(path + ": expected an object");
    return v;
}

void read(const json& obj, const char* key, double& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + key + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(path + key + ": must be finite");
}

void read(const json& obj, const char* key, int& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + key + ": expected an integer");
    const auto value = v.get<long long>();
    if (value < -(1LL << 31) || value >= (1LL << 31)) throw ConfigError(path + key + ": out of range");
    out = static_cast<int>(value);
}

void read(const json& obj, const char* key, bool& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(path + key + ": expected true or false");
    out = v.get<bool>();
}

void read(const json& obj, const char* key, std::string& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(path + key + ": expected a string");
    out = v.get<std::string>();
}

void read(const json& obj, const char* key, Interval& out, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(path + key + ": expected [lo, hi]");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
}

void read(const json& obj, const char* key, std::vector<double>& out, int n, const std::string& path)
{
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    std::vector<double> values;
    if (v.is_number()) {
        values.assign(1, v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(path + key + ": expected numbers");
            values.push_back(e.get<double>());
        }
    } else {
        throw ConfigError(path + key + ": expected a number or an array of numbers");
    }
    if (values.size() == 1) values.assign(n, values[0]);
    if (static_cast<int>(values.size()) != n) {
        throw ConfigError(path + key + ": expected " + std::to_string(n) + " entries, one per source");
    }
    out = std::move(values);
}

void require_interval(const Interval& iv, const std::string& field)
{
    if (!(std::isfinite(iv[0]) && std::isfinite(iv[1]) && iv[0] < iv[1])) {
        throw ConfigError(field + ": lower bound must be below upper bound");
    }
}

} // namespace

int ExperimentConfig::n_sources() const
{
    return sources_for(testbed);
}

void ExperimentConfig::validate() const
{
    if (!kTestbeds.count(testbed)) throw ConfigError("testbed: unknown testbed '" + testbed + "'");
    if (!kAlgorithms.count(algorithm)) throw ConfigError("algorithm: unknown algorithm '" + algorithm + "'");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p: must lie in [0, 1]");
    if (replications < 1) throw ConfigError("replications: must be >= 1");
    if (!(budget > 0.0)) throw ConfigError("budget: must be > 0");
    if (!(sim_cost > 0.0)) throw ConfigError("sim_cost: must be > 0");
    if (n_init < 1) throw ConfigError("n_init: must be >= 1");
    if (n_init * sim_cost > budget) throw ConfigError("budget: smaller than the initialisation cost n_init * sim_cost");
    if (static_cast<int>(source_costs.size()) != n_sources()) throw ConfigError("source_costs: one entry per source");
    if (static_cast<int>(source_noise_var.size()) != n_sources()) {
        throw ConfigError("source_noise_var: one entry per source");
    }
    for (double c : source_costs) {
        if (!(c > 0.0)) throw ConfigError("source_costs: must be > 0");
    }
    for (double v : source_noise_var) {
        if (!(v > 0.0)) throw ConfigError("source_noise_var: must be > 0");
    }

    const auto& a = acquisition;
    if (a.n_a_samples < 1) throw ConfigError("acquisition.n_a_samples: must be >= 1");
    if (a.n_r < 1) throw ConfigError("acquisition.n_r: must be >= 1");
    if (a.grid_per_dim < 1) throw ConfigError("acquisition.grid_per_dim: must be >= 1");
    if (a.restarts < 1) throw ConfigError("acquisition.restarts: must be >= 1");
    if (a.max_evals < 1) throw ConfigError("acquisition.max_evals: must be >= 1");
    if (a.recommend_restarts < 1) throw ConfigError("acquisition.recommend_restarts: must be >= 1");
    if (hyper.init_restarts < 1) throw ConfigError("hyper.init_restarts: must be >= 1");
    if (hyper.refit_restarts < 1) throw ConfigError("hyper.refit_restarts: must be >= 1");
    if (hyper.max_evals < 1) throw ConfigError("hyper.max_evals: must be >= 1");

    const auto& nv = newsvendor;
    if (!(nv.cost > 0.0)) throw ConfigError("newsvendor.cost: must be > 0");
    if (!(nv.price > nv.cost)) throw ConfigError("newsvendor.price: must exceed newsvendor.cost");
    if (!(nv.demand_var > 0.0)) throw ConfigError("newsvendor.demand_var: must be > 0");
    require_interval(nv.x_bounds, "newsvendor.x_bounds");
    require_interval(nv.a_bounds, "newsvendor.a_bounds");

    const auto& g = gp_testfunc;
    if (!(g.lengthscale > 0.0)) throw ConfigError("gp_testfunc.lengthscale: must be > 0");
    if (!(g.signal_var > 0.0)) throw ConfigError("gp_testfunc.signal_var: must be > 0");
    if (!(g.noise_var >= 0.0)) throw ConfigError("gp_testfunc.noise_var: must be >= 0");
    if (g.n_anchor < 1) throw ConfigError("gp_testfunc.n_anchor: must be >= 1");
    require_interval(g.x_bounds, "gp_testfunc.x_bounds");
    require_interval(g.a_bounds, "gp_testfunc.a_bounds");
}

ExperimentConfig parse_config(const json& doc)
{
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(doc,
                   {"testbed", "seed", "algorithm", "p", "replications", "budget", "sim_cost", "n_init",
                    "source_costs", "source_noise_var", "acquisition", "hyper", "newsvendor", "gp_testfunc"},
                   "");

    std::string testbed = "newsvendor";
    read(doc, "testbed", testbed, "");
    if (!kTestbeds.count(testbed)) throw ConfigError("testbed: unknown testbed '" + testbed + "'");
    ExperimentConfig cfg = defaults_for(testbed);

    if (doc.contains("seed")) {
        const json& s = doc.at("seed");
        const bool ok = s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0);
        if (!ok) throw ConfigError("seed: expected a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    read(doc, "algorithm", cfg.algorithm, "");
    read(doc, "p", cfg.p, "");
    read(doc, "replications", cfg.replications, "");
    read(doc, "budget", cfg.budget, "");
    read(doc, "sim_cost", cfg.sim_cost, "");
    read(doc, "n_init", cfg.n_init, "");
    read(doc, "source_costs", cfg.source_costs, cfg.n_sources(), "");
    read(doc, "source_noise_var", cfg.source_noise_var, cfg.n_sources(), "");

    if (doc.contains("acquisition")) {
        const json& a = object_at(doc, "acquisition", "acquisition");
        const std::string path = "acquisition.";
        reject_unknown(a, {"n_a_samples", "n_r", "grid_per_dim", "restarts", "max_evals", "recommend_restarts"}, path);
        read(a, "n_a_samples", cfg.acquisition.n_a_samples, path);
        read(a, "n_r", cfg.acquisition.n_r, path);
        read(a, "grid_per_dim", cfg.acquisition.grid_per_dim, path);
        read(a, "restarts", cfg.acquisition.restarts, path);
        read(a, "max_evals", cfg.acquisition.max_evals, path);
        read(a, "recommend_restarts", cfg.acquisition.recommend_restarts, path);
    }
    if (doc.contains("hyper")) {
        const json& h = object_at(doc, "hyper", "hyper");
        const std::string path = "hyper.";
        reject_unknown(h, {"init_restarts", "refit_restarts", "max_evals", "shared_lengthscale"}, path);
        read(h, "init_restarts", cfg.hyper.init_restarts, path);
        read(h, "refit_restarts", cfg.hyper.refit_restarts, path);
        read(h, "max_evals", cfg.hyper.max_evals, path);
        read(h, "shared_lengthscale", cfg.hyper.shared_lengthscale, path);
    }
    if (doc.contains("newsvendor")) {
        const json& n = object_at(doc, "newsvendor", "newsvendor");
        const std::string path = "newsvendor.";
        reject_unknown(n, {"price", "cost", "demand_var", "true_mean", "x_bounds", "a_bounds"}, path);
        read(n, "price", cfg.newsvendor.price, path);
        read(n, "cost", cfg.newsvendor.cost, path);
        read(n, "demand_var", cfg.newsvendor.demand_var, path);
        read(n, "true_mean", cfg.newsvendor.true_mean, path);
        read(n, "x_bounds", cfg.newsvendor.x_bounds, path);
        read(n, "a_bounds", cfg.newsvendor.a_bounds, path);
    }
    if (doc.contains("gp_testfunc")) {
        const json& g = object_at(doc, "gp_testfunc", "gp_testfunc");
        const std::string path = "gp_testfunc.";
        reject_unknown(g, {"lengthscale", "signal_var", "noise_var", "n_anchor", "x_bounds", "a_bounds"}, path);
        read(g, "lengthscale", cfg.gp_testfunc.lengthscale, path);
        read(g, "signal_var", cfg.gp_testfunc.signal_var, path);
        read(g, "noise_var", cfg.gp_testfunc.noise_var, path);
        read(g, "n_anchor", cfg.gp_testfunc.n_anchor, path);
        read(g, "x_bounds", cfg.gp_testfunc.x_bounds, path);
        read(g, "a_bounds", cfg.gp_testfunc.a_bounds, path);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: malformed JSON in " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json config_to_json(const ExperimentConfig& cfg)
{
    const auto& a = cfg.acquisition;
    const auto& h = cfg.hyper;
    const auto& n = cfg.newsvendor;
    const auto& g = cfg.gp_testfunc;
    return json{
        {"testbed", cfg.testbed},
        {"seed", cfg.seed},
        {"algorithm", cfg.algorithm},
        {"p", cfg.p},
        {"replications", cfg.replications},
        {"budget", cfg.budget},
        {"sim_cost", cfg.sim_cost},
        {"n_init", cfg.n_init},
        {"source_costs", cfg.source_costs},
        {"source_noise_var", cfg.source_noise_var},
        {"acquisition",
         {{"n_a_samples", a.n_a_samples},
          {"n_r", a.n_r},
          {"grid_per_dim", a.grid_per_dim},
          {"restarts", a.restarts},
          {"max_evals", a.max_evals},
          {"recommend_restarts", a.recommend_restarts}}},
        {"hyper",
         {{"init_restarts", h.init_restarts},
          {"refit_restarts", h.refit_restarts},
          {"max_evals", h.max_evals},
          {"shared_lengthscale", h.shared_lengthscale}}},
        {"newsvendor",
         {{"price", n.price},
          {"cost", n.cost},
          {"demand_var", n.demand_var},
          {"true_mean", n.true_mean},
          {"x_bounds", n.x_bounds},
          {"a_bounds", n.a_bounds}}},
        {"gp_testfunc",
         {{"lengthscale", g.lengthscale},
          {"signal_var", g.signal_var},
          {"noise_var", g.noise_var},
          {"n_anchor", g.n_anchor},
          {"x_bounds", g.x_bounds},
          {"a_bounds", g.a_bounds}}},
    };
}

void save_config(const ExperimentConfig& cfg, const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << config_to_json(cfg).dump(2) << '\n';
}

void apply_env_overrides(ExperimentConfig& cfg)
{
    const char* env = std::getenv("BICO_SEED");
    if (!env || !*env) return;
    try {
        std::size_t used = 0;
        const unsigned long long seed = std::stoull(env, &used, 0);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        cfg.seed = seed;
    } catch (const std::exception&) {
        throw ConfigError(std::string("BICO_SEED: not an unsigned integer: ") + env);
    }
}

// --- Replications ----------------------------------------------------------------------------

std::uint64_t replication_seed(const ExperimentConfig& cfg, int rep)
{
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
}

namespace {

BoxBounds box_of(const Interval& iv, int dim)
{
    return BoxBounds(Vector::Constant(dim, iv[0]), Vector::Constant(dim, iv[1]));
}

} // namespace

Problem build_problem(const ExperimentConfig& cfg, int rep)
{
    Problem problem;
    if (cfg.testbed == "newsvendor") {
        NewsvendorConfig nv;
        nv.price = cfg.newsvendor.price;
        nv.cost = cfg.newsvendor.cost;
        nv.demand_var = cfg.newsvendor.demand_var;
        nv.true_mean = cfg.newsvendor.true_mean;
        nv.x_bounds = box_of(cfg.newsvendor.x_bounds, 1);
        nv.a_bounds = box_of(cfg.newsvendor.a_bounds, 1);
        problem = make_newsvendor_problem(nv, cfg.source_noise_var[0], cfg.source_costs[0]);
    } else {
        const auto& g = cfg.gp_testfunc;
        GpHyperparams hyper;
        hyper.signal_var = g.signal_var;
        hyper.lengthscales = Vector::Constant(1, g.lengthscale);
        hyper.noise_var = g.noise_var;
        const bool depends_on_a = cfg.testbed != "gp_1d_irrelevant";
        const std::uint64_t fn_seed = mix_seed(replication_seed(cfg, rep), 0);
        const GpTestInstance inst = gp_testfunc_build(fn_seed, hyper, g.n_anchor, box_of(g.x_bounds, 1),
                                                      box_of(g.a_bounds, cfg.n_sources()), depends_on_a);
        problem = make_gp_problem(inst, 10.0, 1.0);
    }
    for (int s = 0; s < cfg.n_sources(); ++s) {
        problem.sources[s].obs_noise_var = cfg.source_noise_var[s];
        problem.sources[s].cost = cfg.source_costs[s];
    }
    if (problem.truth) {
        const Vector a_star = problem.truth->a_star;
        const auto specs = problem.sources;
        problem.query = [specs, a_star](int s, Rng& rng) { return source_simulate(specs.at(s), a_star, rng); };
    }
    return problem;
}

LoopConfig loop_config(const ExperimentConfig& cfg)
{
    LoopConfig lc;
    lc.budget = cfg.budget;
    lc.sim_cost = cfg.sim_cost;
    lc.n_init = cfg.n_init;
    lc.acq.n_a_samples = cfg.acquisition.n_a_samples;
    lc.acq.n_r = cfg.acquisition.n_r;
    lc.acq.grid_per_dim = cfg.acquisition.grid_per_dim;
    lc.acq.restarts = cfg.acquisition.restarts;
    lc.acq.max_evals = cfg.acquisition.max_evals;
    lc.acq.recommend_restarts = cfg.acquisition.recommend_restarts;
    lc.hyper_init = {cfg.hyper.init_restarts, cfg.hyper.max_evals};
    lc.hyper_refit = {cfg.hyper.refit_restarts, cfg.hyper.max_evals};
    lc.shared_lengthscale = cfg.hyper.shared_lengthscale;
    return lc;
}

ReplicationResult run_replication(const ExperimentConfig& cfg, int rep)
{
    const Problem problem = build_problem(cfg, rep);
    const LoopConfig lc = loop_config(cfg);
    Rng rng(mix_seed(replication_seed(cfg, rep), 1));

    ReplicationResult out;
    out.rep = rep;
    out.seed = replication_seed(cfg, rep);
    if (cfg.algorithm == "bico") {
        out.run = run_bico(lc, problem, rng);
    } else if (cfg.algorithm == "fixed_fraction") {
        out.run = run_fixed_fraction(cfg.p, lc, problem, rng);
    } else {
        out.run = run_random(lc, problem, rng);
    }
    out.oc = out.run.oc;
    out.m_final = out.run.m_final;
    out.truth = *problem.truth;
    return out;
}

namespace {

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string cell(double v)
{
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string rep_stem(int rep)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%04d", rep);
    return buf;
}

void write_file_atomically(const fs::path& path, const std::string& content)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace

json replication_to_json(const ExperimentConfig& cfg, const ReplicationResult& r)
{
    json doc{
        {"version", version_tag()},
        {"config", config_to_json(cfg)},
        {"replication", r.rep},
        {"seed", r.seed},
        {"algorithm", cfg.algorithm},
        {"oc", number_or_null(r.oc)},
        {"m_final", r.m_final},
        {"n_iterations", r.run.log.size()},
        {"x_r", to_std(r.run.x_r)},
        {"x_star", to_std(r.truth.x_star)},
        {"a_star", to_std(r.truth.a_star)},
        {"theta_star", r.truth.theta_star},
        {"final_hyper",
         {{"signal_var", r.run.hyper.signal_var},
          {"lengthscales", to_std(r.run.hyper.lengthscales)},
          {"noise_var", r.run.hyper.noise_var}}},
    };
    if (cfg.algorithm == "fixed_fraction") doc["p"] = cfg.p;
    return doc;
}

void write_iteration_csv(std::ostream& os, const ReplicationResult& r, int dim_x, int dim_a)
{
    os << "t,action_type";
    for (int d = 0; d < dim_x; ++d) os << ",x" << d;
    for (int j = 0; j < dim_a; ++j) os << ",a" << j;
    os << ",s,r,y,voi_sim,voi_src";
    for (int d = 0; d < dim_x; ++d) os << ",x_r" << d;
    os << ",oc,b\n";

    for (const auto& e : r.run.log) {
        const bool sim = e.action.is_simulate();
        os << e.t << ',' << (sim ? "simulate" : "query");
        for (int d = 0; d < dim_x; ++d) os << ',' << (sim ? cell(e.action.point.x[d]) : "");
        for (int j = 0; j < dim_a; ++j) os << ',' << (sim ? cell(e.action.point.a[j]) : "");
        os << ',' << (sim ? "" : std::to_string(e.action.source));
        os << ',' << (sim ? "" : cell(e.observed));
        os << ',' << (sim ? cell(e.observed) : "");
        os << ',' << cell(e.voi_sim) << ',' << cell(e.voi_src);
        for (int d = 0; d < dim_x; ++d) os << ',' << cell(e.x_r[d]);
        os << ',' << cell(e.oc) << ',' << cell(e.b) << '\n';
    }
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, int workers,
                                 std::ostream* progress)
{
    cfg.validate();
    if (workers < 1) throw ConfigError("workers: must be >= 1");
    fs::create_directories(out_dir);

    ExperimentSummary summary;
    std::vector<int> pending;
    for (int rep = 0; rep < cfg.replications; ++rep) {
        if (fs::exists(out_dir / (rep_stem(rep) + ".json"))) {
            ++summary.skipped;
        } else {
            pending.push_back(rep);
        }
    }

    const int dim_x = 1;
    const int dim_a = cfg.n_sources();
    std::atomic<std::size_t> next{0};
    std::atomic<int> completed{0};
    std::atomic<int> failed{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < pending.size(); k = next++) {
            const int rep = pending[k];
            const std::string stem = rep_stem(rep);
            try {
                const ReplicationResult r = run_replication(cfg, rep);
                std::ostringstream csv;
                write_iteration_csv(csv, r, dim_x, dim_a);
                write_file_atomically(out_dir / (stem + ".csv"), csv.str());
                write_file_atomically(out_dir / (stem + ".json"), replication_to_json(cfg, r).dump(2) + "\n");
                fs::remove(out_dir / (stem + ".failed.json"));
                ++completed;
                if (progress) {
                    std::lock_guard lock(log_mutex);
                    *progress << stem << ": oc=" << cell(r.oc) << " m=" << r.m_final << '\n';
                }
            } catch (const std::exception& e) {
                const json doc{{"version", version_tag()},
                               {"config", config_to_json(cfg)},
                               {"replication", rep},
                               {"seed", replication_seed(cfg, rep)},
                               {"algorithm", cfg.algorithm},
                               {"error", e.what()}};
                try {
                    write_file_atomically(out_dir / (stem + ".failed.json"), doc.dump(2) + "\n");
                } catch (const std::exception&) {
                }
                ++failed;
                if (progress) {
                    std::lock_guard lock(log_mutex);
                    *progress << stem << ": failed: " << e.what() << '\n';
                }
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(pending.size())));
    std::vector<std::thread> threads;
    for (int i = 1; i < n_threads; ++i) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();

    summary.completed = completed;
    summary.failed = failed;
    return summary;
}

// --- Reporting -------------------------------------------------------------------------------

namespace {

struct Sample {
    std::vector<double> oc;
    std::vector<double> m;
    int failed = 0;
};

void mean_ci(std::vector<double> values, double& mean, std::optional<double>& ci)
{
    // Sorting first makes the sums independent of file order.
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    mean = sum / n;
    ci.reset();
    if (values.size() < 2) return;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    ci = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

std::string fmt_opt(const std::optional<double>& v)
{
    return v ? cell(*v) : "NA";
}

} // namespace

AggregateReport build_report(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw std::runtime_error("report: not a directory: " + dir.string());
    static const std::regex done(R"(rep_\d+\.json)");
    static const std::regex fail(R"(rep_\d+\.failed\.json)");

    std::map<std::pair<std::string, double>, Sample> groups;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const bool is_done = std::regex_match(name, done);
        const bool is_fail = std::regex_match(name, fail);
        if (!is_done && !is_fail) continue;

        std::ifstream in(entry.path());
        const json doc = json::parse(in);
        const std::string algorithm = doc.at("algorithm").get<std::string>();
        const double p = algorithm == "fixed_fraction" ? doc.at("config").at("p").get<double>() : 0.0;
        Sample& s = groups[{algorithm, p}];
        if (is_fail || doc.at("oc").is_null()) {
            ++s.failed;
            continue;
        }
        s.oc.push_back(doc.at("oc").get<double>());
        s.m.push_back(doc.at("m_final").get<double>());
    }

    AggregateReport report;
    for (const auto& [key, s] : groups) {
        GroupSummary g;
        g.algorithm = key.first;
        if (g.algorithm == "fixed_fraction") g.p = key.second;
        g.n = static_cast<int>(s.oc.size());
        g.failed = s.failed;
        if (g.n > 0) {
            mean_ci(s.oc, g.mean_oc, g.oc_ci);
            mean_ci(s.m, g.mean_m, g.m_ci);
        } else {
            g.mean_oc = g.mean_m = std::numeric_limits<double>::quiet_NaN();
        }
        report.groups.push_back(std::move(g));
    }
    if (report.groups.empty()) throw std::runtime_error("report: no replication results under " + dir.string());
    if (std::all_of(report.groups.begin(), report.groups.end(), [](const GroupSummary& g) { return g.n == 0; })) {
        throw std::runtime_error("report: every replication under " + dir.string() + " failed");
    }
    return report;
}

void write_report(const AggregateReport& report, const std::string& format, std::ostream& os)
{
    const char* method = "normal approximation, 1.96*sd/sqrt(n)";
    if (format == "json") {
        json groups = json::array();
        for (const auto& g : report.groups) {
            groups.push_back({{"algorithm", g.algorithm},
                              {"p", g.p ? json(*g.p) : json(nullptr)},
                              {"n", g.n},
                              {"failed", g.failed},
                              {"mean_oc", number_or_null(g.mean_oc)},
                              {"oc_ci95", g.oc_ci ? json(*g.oc_ci) : json("NA")},
                              {"mean_m", number_or_null(g.mean_m)},
                              {"m_ci95", g.m_ci ? json(*g.m_ci) : json("NA")}});
        }
        os << json{{"ci_method", method}, {"groups", groups}}.dump(2) << '\n';
        return;
    }
    if (format != "csv") throw ConfigError("format: expected csv or json");
    os << "# ci95: " << method << '\n';
    os << "algorithm,p,n,failed,mean_oc,oc_ci95,mean_m,m_ci95\n";
    for (const auto& g : report.groups) {
        os << g.algorithm << ',' << (g.p ? cell(*g.p) : "") << ',' << g.n << ',' << g.failed << ','
           << cell(g.mean_oc) << ',' << fmt_opt(g.oc_ci) << ',' << cell(g.mean_m) << ',' << fmt_opt(g.m_ci) << '\n';
    }
}

void write_plot_data(const AggregateReport& report, const fs::path& dir)
{
    std::ostringstream curve;
    curve << "p,mean_m,m_ci95,mean_oc,oc_ci95\n";
    std::ostringstream band;
    band << "mean_oc,oc_ci95,mean_m,m_ci95\n";
    bool has_band = false;
    for (const auto& g : report.groups) {
        if (g.n == 0) continue;
        if (g.algorithm == "fixed_fraction") {
            curve << cell(*g.p) << ',' << cell(g.mean_m) << ',' << fmt_opt(g.m_ci) << ',' << cell(g.mean_oc) << ','
                  << fmt_opt(g.oc_ci) << '\n';
        } else if (g.algorithm == "bico") {
            band << cell(g.mean_oc) << ',' << fmt_opt(g.oc_ci) << ',' << cell(g.mean_m) << ',' << fmt_opt(g.m_ci)
                 << '\n';
            has_band = true;
        }
    }
    write_file_atomically(dir / "oc_vs_m.csv", curve.str());
    if (has_band) write_file_atomically(dir / "bico_band.csv", band.str());
}

} // namespace bico
