#include "bico/bico_loop.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "bico/inner_optim.hpp"

namespace bico {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-stream identifiers under the run's base seed.
enum Stream : std::uint64_t { kInit = 1, kSimNoise, kSourceNoise, kHyper, kDisc, kVoi, kRecommend };

} // namespace

BudgetLedger::BudgetLedger(double total) : total_(total)
{
    if (!(total > 0.0) || !std::isfinite(total)) throw ConfigError("budget must be a positive finite number");
}

void BudgetLedger::charge(double cost)
{
    if (!(cost > 0.0)) throw std::invalid_argument("BudgetLedger::charge: cost must be > 0");
    consumed_ += cost;
}

void LoopConfig::validate(const Problem& problem) const
{
    if (!(budget > 0.0) || !std::isfinite(budget)) throw ConfigError("budget must be > 0");
    if (!(sim_cost > 0.0)) throw ConfigError("sim_cost must be > 0");
    if (n_init < 1) throw ConfigError("n_init must be >= 1");
    if (n_init * sim_cost > budget) {
        throw ConfigError("budget is smaller than the initialisation cost n_init * sim_cost");
    }
    if (acq.n_a_samples < 1) throw ConfigError("acquisition.n_a_samples must be >= 1");
    if (acq.grid_per_dim < 1) throw ConfigError("acquisition.grid_per_dim must be >= 1");
    if (acq.n_r < 1) throw ConfigError("acquisition.n_r must be >= 1");
    if (acq.restarts < 1) throw ConfigError("acquisition.restarts must be >= 1");
    if (acq.max_evals < 1) throw ConfigError("acquisition.max_evals must be >= 1");
    if (hyper_init.restarts < 1 || hyper_refit.restarts < 1) throw ConfigError("hyper.restarts must be >= 1");
    if (!problem.simulate) throw ConfigError("problem has no simulator");
    if (!problem.sources.empty() && !problem.query) throw ConfigError("problem declares sources but no query");
    for (std::size_t i = 0; i < problem.sources.size(); ++i) {
        const auto& s = problem.sources[i];
        if (s.id != static_cast<int>(i)) throw ConfigError("source ids must be 0, 1, ... in declaration order");
        if (!(s.cost > 0.0)) throw ConfigError("source_costs must be > 0");
        if (!(s.obs_noise_var > 0.0)) throw ConfigError("source_noise_var must be > 0");
    }
}

namespace {

/// Shared state of one run: data, beliefs, surrogate and the cached discretisation.
class LoopState {
public:
    LoopState(const LoopConfig& cfg, const Problem& problem, Rng& rng)
        : cfg_(cfg),
          problem_(problem),
          ledger_(cfg.budget),
          base_(rng()),
          sim_rng_(mix_seed(base_, kSimNoise)),
          source_rng_(mix_seed(base_, kSourceNoise)),
          hyper_rng_(mix_seed(base_, kHyper)),
          sims_(problem.x_box.dim(), problem.a_box.dim()),
          data_(cfg.preloaded)
    {
        cfg.validate(problem);
    }

    void initialise()
    {
        const BoxBounds joint = problem_.x_box.join(problem_.a_box);
        Rng init_rng(mix_seed(base_, kInit));
        for (const auto& v : lhs_sample(cfg_.n_init, joint, init_rng)) {
            const JointPoint p = JointPoint::split(v, problem_.x_box.dim());
            sims_.add(p, run_simulator(p, 0));
            ledger_.charge(cfg_.sim_cost);
        }
        post_ = update_posterior(problem_.sources, data_, problem_.a_box);
        refit(cfg_.hyper_init, false);
        rebuild(0);
    }

    [[nodiscard]] bool exhausted() const { return ledger_.exhausted(); }
    [[nodiscard]] double consumed() const { return ledger_.consumed(); }
    [[nodiscard]] const DiscreteModel& model() const { return *model_; }
    [[nodiscard]] const ParameterPosterior& posterior() const { return post_; }
    [[nodiscard]] const SourceDataset& data() const { return data_; }

    Rng voi_rng(int t) const { return Rng(mix_seed(mix_seed(base_, kVoi), static_cast<std::uint64_t>(t))); }

    double simulate(const JointPoint& p, int t)
    {
        const double y = run_simulator(p, t);
        sims_.add(p, y);
        ledger_.charge(cfg_.sim_cost);
        refit(cfg_.hyper_refit, true);
        return y;
    }

    double query(int s)
    {
        const double r = problem_.query(s, source_rng_);
        if (!std::isfinite(r)) throw NumericError("source " + std::to_string(s) + " returned a non-finite value");
        data_.add(s, r);
        ledger_.charge(problem_.sources[s].cost);
        post_ = update_posterior(problem_.sources, data_, problem_.a_box);
        return r;
    }

    /// New discretisation and cached model after the data changed at iteration t.
    void rebuild(int t)
    {
        Rng r(mix_seed(mix_seed(base_, kDisc), static_cast<std::uint64_t>(t)));
        const int grid = cfg_.acq.grid_per_dim * problem_.x_box.dim();
        model_.reset();
        disc_ = make_discretization(problem_.x_box, grid, post_, cfg_.acq.n_a_samples, r);
        model_ = std::make_unique<DiscreteModel>(*gp_, disc_);
    }

    Vector recommend_now(int t) const
    {
        Rng r(mix_seed(mix_seed(base_, kRecommend), static_cast<std::uint64_t>(t)));
        return recommend(*model_, problem_.x_box, cfg_.acq, r).x;
    }

    void record(std::vector<IterationLog>& log, int t, Action action, double observed, double voi_sim,
                double voi_src)
    {
        rebuild(t);
        IterationLog entry;
        entry.t = t;
        entry.action = std::move(action);
        entry.observed = observed;
        entry.voi_sim = voi_sim;
        entry.voi_src = voi_src;
        entry.x_r = recommend_now(t);
        entry.oc = problem_.truth ? opportunity_cost(entry.x_r, *problem_.truth) : kNaN;
        entry.b = ledger_.consumed();
        log.push_back(std::move(entry));
    }

    RunResult finish(std::vector<IterationLog> log) &&
    {
        RunResult out;
        out.x_r = log.empty() ? recommend_now(0) : log.back().x_r;
        out.oc = problem_.truth ? opportunity_cost(out.x_r, *problem_.truth) : kNaN;
        out.m_final = data_.size() - cfg_.preloaded.size();
        out.log = std::move(log);
        out.hyper = gp_->hyper();
        out.simulations = std::move(sims_);
        out.source_data = std::move(data_);
        return out;
    }

private:
    double run_simulator(const JointPoint& p, int t)
    {
        std::string reason;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                const double y = problem_.simulate(p, sim_rng_);
                if (std::isfinite(y)) return y;
                reason = "non-finite output";
            } catch (const std::exception& e) {
                reason = e.what();
            }
        }
        throw std::runtime_error("simulator failed twice at iteration " + std::to_string(t) + ": " + reason);
    }

    void refit(const HyperFitOptions& opts, bool warm)
    {
        const HyperBounds bounds = default_hyper_bounds(sims_, cfg_.shared_lengthscale);
        std::vector<GpHyperparams> seeds;
        if (warm && gp_) seeds.push_back(gp_->hyper());
        const HyperFit fit = fit_hyperparameters(sims_, bounds, hyper_rng_, opts, seeds);
        model_.reset();
        gp_.emplace(GpPosterior::fit(sims_, fit.hyper));
    }

    const LoopConfig& cfg_;
    const Problem& problem_;
    BudgetLedger ledger_;
    std::uint64_t base_;
    Rng sim_rng_;
    Rng source_rng_;
    Rng hyper_rng_;
    SimulationDataset sims_;
    SourceDataset data_;
    ParameterPosterior post_;
    std::optional<GpPosterior> gp_;
    DiscretizationSet disc_;
    std::unique_ptr<DiscreteModel> model_;
};

/// One pure simulation step: maximise the simulation value and sample there.
void simulation_step(LoopState& state, const LoopConfig& cfg, const Problem& problem, int t,
                     std::vector<IterationLog>& log)
{
    Rng r = state.voi_rng(t);
    const VoiEstimate best = max_voi_simulation(state.model(), problem.x_box, problem.a_box, cfg.sim_cost, cfg.acq, r);
    const double y = state.simulate(*best.point, t);
    state.record(log, t, Action::simulate(*best.point), y, best.value, kNaN);
}

} // namespace

RunResult run_bico(const LoopConfig& cfg, const Problem& problem, Rng& rng)
{
    LoopState state(cfg, problem, rng);
    state.initialise();

    std::vector<IterationLog> log;
    for (int t = 1; !state.exhausted(); ++t) {
        Rng r = state.voi_rng(t);
        const VoiEstimate sim =
            max_voi_simulation(state.model(), problem.x_box, problem.a_box, cfg.sim_cost, cfg.acq, r);

        std::optional<VoiEstimate> src;
        for (const auto& spec : problem.sources) {
            VoiEstimate v = voi_source(spec, state.model(), state.posterior(), problem.sources, state.data(),
                                       cfg.acq.n_r, r);
            if (!src || v.value > src->value) src = std::move(v);
        }
        const double src_value = src ? src->value : kNaN;

        if (!src || sim.value >= src->value) {
            const double y = state.simulate(*sim.point, t);
            state.record(log, t, Action::simulate(*sim.point), y, sim.value, src_value);
        } else {
            const double r_obs = state.query(*src->source);
            state.record(log, t, Action::query(*src->source), r_obs, sim.value, src_value);
        }
    }
    return std::move(state).finish(std::move(log));
}

RunResult run_fixed_fraction(double p, const LoopConfig& cfg, const Problem& problem, Rng& rng)
{
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
    LoopState state(cfg, problem, rng);
    state.initialise();

    std::vector<IterationLog> log;
    int t = 1;
    if (!problem.sources.empty()) {
        const double allowance = std::min(std::floor(cfg.budget * p + 1e-9), cfg.budget - state.consumed());
        double spent = 0.0;
        for (std::size_t k = 0; !state.exhausted(); ++k, ++t) {
            const int s = static_cast<int>(k % problem.sources.size());
            const double cost = problem.sources[s].cost;
            if (spent + cost > allowance + 1e-9) break;
            spent += cost;
            const double r_obs = state.query(s);
            state.record(log, t, Action::query(s), r_obs, kNaN, kNaN);
        }
    }
    for (; !state.exhausted(); ++t) simulation_step(state, cfg, problem, t, log);
    return std::move(state).finish(std::move(log));
}

RunResult run_random(const LoopConfig& cfg, const Problem& problem, Rng& rng)
{
    LoopState state(cfg, problem, rng);
    state.initialise();

    const BoxBounds joint = problem.x_box.join(problem.a_box);
    std::vector<IterationLog> log;
    for (int t = 1; !state.exhausted(); ++t) {
        Rng r = state.voi_rng(t);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vector v(joint.dim());
        for (int d = 0; d < joint.dim(); ++d) v[d] = joint.lo(d) + unit(r) * joint.width(d);
        const JointPoint point = JointPoint::split(v, problem.x_box.dim());
        const double y = state.simulate(point, t);
        state.record(log, t, Action::simulate(point), y, kNaN, kNaN);
    }
    return std::move(state).finish(std::move(log));
}

} // namespace bico
