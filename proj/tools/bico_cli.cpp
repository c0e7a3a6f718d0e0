// bico: run replicated experiments, baseline sweeps and reports.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bico/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

bico::ExperimentConfig load(const std::string& path)
{
    bico::ExperimentConfig cfg = bico::load_config(path);
    bico::apply_env_overrides(cfg);
    return cfg;
}

int run_one(const bico::ExperimentConfig& cfg, const fs::path& out, int workers)
{
    fs::create_directories(out);
    bico::save_config(cfg, out / "config.json");
    std::cout << bico::config_to_json(cfg).dump(2) << '\n';
    const auto summary = bico::run_experiment(cfg, out, workers, &std::cerr);
    std::cerr << out.string() << ": " << summary.completed << " completed, " << summary.skipped << " skipped, "
              << summary.failed << " failed\n";
    return summary.completed + summary.skipped == 0 ? kExitRuntime : 0;
}

std::vector<double> parse_p_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw bico::ConfigError("--p: not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw bico::ConfigError("--p: empty list");
    return out;
}

std::string p_dir(double p)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "p_%.3f", p);
    return buf;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Budgeted simulation optimisation with input-parameter data collection"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    int workers = 1;

    auto* run = app.add_subcommand("run", "Run the replications of one experiment");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--workers", workers, "Parallel replications")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory");

    std::string in_dir;
    std::string format = "csv";
    auto* report = app.add_subcommand("report", "Aggregate replication results");
    report->add_option("--in", in_dir, "Results directory (searched recursively)")->required();
    report->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    std::string p_list;
    auto* sweep = app.add_subcommand("sweep-p", "Fixed-fraction baseline for every p in a list");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    sweep->add_option("--p", p_list, "Comma-separated fractions, e.g. 0,0.1,0.2")->required();
    sweep->add_option("--workers", workers, "Parallel replications")->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_dir, "Output directory; one p_<value> subdirectory per fraction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return run_one(load(config_path), out_dir, workers);

        if (*sweep) {
            bico::ExperimentConfig cfg = load(config_path);
            const auto ps = parse_p_list(p_list);
            cfg.algorithm = "fixed_fraction";
            for (double p : ps) {
                cfg.p = p;
                cfg.validate();
            }
            int status = 0;
            for (double p : ps) {
                cfg.p = p;
                status = std::max(status, run_one(cfg, fs::path(out_dir) / p_dir(p), workers));
            }
            return status;
        }

        const bico::AggregateReport agg = bico::build_report(in_dir);
        bico::write_report(agg, format, std::cout);
        bico::write_plot_data(agg, in_dir);
        return 0;
    } catch (const bico::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
