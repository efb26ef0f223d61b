// Command-line front end: run, sweep, oracle, gen-trace, inspect.

#include "bilevel/balde.hpp"
#include "bilevel/config.hpp"
#include "bilevel/env.hpp"
#include "bilevel/experiment.hpp"
#include "bilevel/lp.hpp"
#include "bilevel/oracle.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

using namespace bilevel;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct CommonArgs {
    std::string config;
    std::vector<std::string> settings;
    std::optional<std::size_t> episodes;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", args.settings, "override a config key (key=value), repeatable");
    cmd->add_option("--episodes", args.episodes, "number of episodes K");
}

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config.empty() ? RunConfig{} : load_config(args.config);
    for (const auto& s : args.settings) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (args.episodes) cfg.episodes = *args.episodes;
    return cfg;
}

void print_summary(const RunConfig& cfg, std::uint64_t seed, const RunResult& result, const std::string& path) {
    const auto& last = result.records.back();
    std::cout << cfg.algorithm.text() << " seed=" << seed << " K=" << last.k << " b_star=" << result.benchmark.b_star
              << " final_b=" << last.budget << " cum_gap=" << last.cum_gap << " cum_viol=" << last.cum_viol
              << " lp_solves=" << result.lp_solves << " stable=" << (result.stability.ok() ? "yes" : "no")
              << " -> " << path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-level budget provisioning and safe scheduling experiments"};
    app.require_subcommand(1);

    CommonArgs run_args;
    std::uint64_t run_seed = 1;
    std::string run_out;
    std::string run_algorithm;
    auto* run = app.add_subcommand("run", "run one algorithm for one seed and write its CSV");
    add_common(run, run_args);
    run->add_option("--seed", run_seed, "seed (default 1)");
    run->add_option("--out", run_out, "output CSV (default: config 'output')");
    run->add_option("--algorithm", run_algorithm, "blol | decoupled | fixed:<b>");

    CommonArgs sweep_args;
    std::vector<std::string> sweep_algorithms{"blol", "fixed:4", "fixed:8", "decoupled"};
    std::vector<std::uint64_t> sweep_seeds;
    std::string sweep_dir = "results";
    std::size_t sweep_jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "run algorithms x seeds, one CSV per cell");
    add_common(sweep, sweep_args);
    sweep->add_option("--algorithms", sweep_algorithms, "algorithms (default blol fixed:4 fixed:8 decoupled)")
        ->delimiter(',');
    sweep->add_option("--seeds", sweep_seeds, "seeds (default: config 'seeds')")->delimiter(',');
    sweep->add_option("--out-dir", sweep_dir, "output directory");
    sweep->add_option("--jobs", sweep_jobs, "parallel cells (0 = hardware concurrency)");

    CommonArgs oracle_args;
    std::uint64_t oracle_seed = 1;
    std::string oracle_out;
    auto* oracle = app.add_subcommand("oracle", "static benchmark: b_star and the L*(b) curve");
    add_common(oracle, oracle_args);
    oracle->add_option("--seed", oracle_seed, "seed of the cost targets");
    oracle->add_option("--out", oracle_out, "write the curve CSV here instead of stdout");

    std::string trace_out;
    std::uint64_t trace_seed = 1;
    BurstyTraceSpec trace_spec;
    auto* gen = app.add_subcommand("gen-trace", "write a synthetic bursty arrival-count trace");
    gen->add_option("--out", trace_out, "output file")->required();
    gen->add_option("--seed", trace_seed, "seed");
    gen->add_option("--bins", trace_spec.bins, "number of bins");
    gen->add_option("--rate-on", trace_spec.rate_on, "Poisson rate in the on state");
    gen->add_option("--rate-off", trace_spec.rate_off, "Poisson rate in the off state");
    gen->add_option("--p-on-off", trace_spec.p_on_to_off, "per-bin on->off probability");
    gen->add_option("--p-off-on", trace_spec.p_off_to_on, "per-bin off->on probability");

    CommonArgs inspect_args;
    std::uint64_t inspect_seed = 1;
    std::optional<double> inspect_budget;
    std::string inspect_counts, inspect_lp, inspect_solve;
    auto* inspect = app.add_subcommand(
        "inspect", "replay BALDE to an episode and dump its counts / extended LP, or solve a dumped LP");
    add_common(inspect, inspect_args);
    inspect->add_option("--seed", inspect_seed, "seed of the replay");
    inspect->add_option("--budget", inspect_budget, "budget for the dumped LP (default B_0)");
    inspect->add_option("--dump-counts", inspect_counts, "write visit counts here");
    inspect->add_option("--dump-lp", inspect_lp, "write the extended LP here");
    inspect->add_option("--solve", inspect_solve, "solve a dumped LP file and print status, objective, duals")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*run) {
            RunConfig cfg = resolve_config(run_args);
            if (!run_algorithm.empty()) cfg.algorithm = AlgorithmSpec::parse(run_algorithm);
            if (!run_out.empty()) cfg.output = run_out;
            cfg.seeds = {run_seed};
            const RunResult result = run_experiment(cfg, run_seed);
            write_records(cfg.output, result.records);
            print_summary(cfg, run_seed, result, cfg.output);
        } else if (*sweep) {
            RunConfig cfg = resolve_config(sweep_args);
            if (!sweep_seeds.empty()) cfg.seeds = sweep_seeds;
            std::vector<AlgorithmSpec> algorithms;
            for (const auto& a : sweep_algorithms) algorithms.push_back(AlgorithmSpec::parse(a));
            for (const auto& cell : run_sweep(cfg, algorithms, sweep_dir, sweep_jobs))
                std::cout << cell.algorithm.text() << " seed=" << cell.seed << " -> " << cell.path << '\n';
        } else if (*oracle) {
            const RunConfig cfg = resolve_config(oracle_args);
            cfg.validate();
            QueueEnv env(cfg.env);
            const BenchmarkResult bench =
                static_oracle(env.true_mdp(), provisioning_cost(cfg, oracle_seed), cfg.episodes,
                              cfg.lower_budget, cfg.oracle_step, {cfg.alpha, cfg.beta});
            std::ofstream file;
            if (!oracle_out.empty()) {
                file.open(oracle_out);
                if (!file) throw std::runtime_error("cannot write '" + oracle_out + "'");
            }
            std::ostream& out = oracle_out.empty() ? std::cout : file;
            std::cout << "# b_star=" << std::setprecision(17) << bench.b_star << " total=" << bench.total_static
                      << '\n';
            out << std::setprecision(17) << "b,L_star,total\n";
            for (std::size_t i = 0; i < bench.curve.budgets.size(); ++i)
                out << bench.curve.budgets[i] << ',' << bench.curve.values[i] << ',' << bench.totals[i] << '\n';
        } else if (*gen) {
            write_trace_counts(trace_out, generate_bursty_trace(trace_spec, trace_seed));
            std::cout << "wrote " << trace_spec.bins << " bins (stationary mean " << trace_spec.stationary_mean()
                      << ") to " << trace_out << '\n';
        } else if (*inspect) {
            if (!inspect_solve.empty()) {
                std::ifstream in(inspect_solve);
                const LpProblem lp = read_lp(in);
                const LpSolution sol = solve(lp);
                std::cout << std::setprecision(17) << "rows=" << lp.num_rows() << " cols=" << lp.num_cols()
                          << " status=" << to_string(sol.status) << " iterations=" << sol.iterations;
                if (sol.optimal()) {
                    std::cout << " objective=" << sol.objective << " dual_objective=" << sol.dual_objective
                              << " primal_residual=" << sol.primal_residual
                              << " dual_residual=" << sol.dual_residual;
                    if (lp.designated_row) std::cout << " lambda=" << sol.duals[*lp.designated_row];
                }
                std::cout << '\n';
                return 0;
            }
            RunConfig cfg = resolve_config(inspect_args);
            cfg.validate();
            QueueEnv env(cfg.env);
            const TabularMdp& mdp = env.true_mdp();
            BaldeOptions options;
            options.warmup_episodes = cfg.episodes;  // replay the baseline only
            options.delta = cfg.delta;
            options.planned_episodes = cfg.episodes;
            options.lower_budget = cfg.lower_budget;
            BaldeLearner learner(mdp, SafeBaseline::idle(mdp), options);
            Rng rng(derive_seed(inspect_seed, 2));
            for (std::size_t k = 1; k <= cfg.episodes; ++k) learner.run_episode(k, cfg.lower_budget, env, rng);
            if (!inspect_counts.empty()) {
                std::ofstream out(inspect_counts);
                learner.confidence().write_counts(out);
            }
            const double budget = inspect_budget.value_or(cfg.lower_budget);
            ConfidenceSnapshot conf = ConfidenceSnapshot::from_model(learner.confidence());
            for (double& r : conf.radius) r *= cfg.radius_scale;
            const ShapedCosts costs = shaped_costs(mdp.loss_table(), mdp.consumption_table(), conf.radius_sums(),
                                                   mdp.horizon(), budget, learner.baseline().consumption);
            ExtendedLpLayout layout;
            const LpProblem lp =
                build_extended_lp(conf, costs.loss, costs.consumption, budget, mdp.initial_distribution(), &layout);
            if (!inspect_lp.empty()) {
                std::ofstream out(inspect_lp);
                write_lp(out, lp);
            }
            std::cout << std::setprecision(17) << "episodes=" << cfg.episodes << " budget=" << budget
                      << " lp_rows=" << lp.num_rows() << " lp_cols=" << lp.num_cols()
                      << " confidence_rows=" << layout.confidence_rows << " minimum_shaped_consumption="
                      << minimum_budget_usage(conf, costs.consumption, mdp.initial_distribution()) << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
