#include "bilevel/experiment.hpp"

#include "bilevel/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

namespace bilevel {

StabilityMonitor::StabilityMonitor(const BlolParams& params, double alpha)
    : params_(params),
      alpha_(alpha),
      switching_bound_(alpha * params.gradient_clip * params.gradient_clip * std::numbers::pi * std::numbers::pi /
                       (6.0 * params.curvature * params.curvature)) {}

void StabilityMonitor::observe(std::size_t k, double before, double after) {
    if (k <= params_.warmup_episodes) return;
    const double eta = 1.0 / (params_.curvature * static_cast<double>(k - params_.warmup_episodes + 1));
    const double limit = params_.gradient_clip * eta;
    const double move = std::abs(after - before);
    worst_ratio_ = std::max(worst_ratio_, move / limit);
    if (move > limit * (1.0 + 1e-12)) ++step_violations_;
    switching_sum_ += alpha_ * move * move;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ProvisioningCost provisioning_cost(const RunConfig& cfg, std::uint64_t seed) {
    ProvisioningCost cost;
    cost.m0 = cfg.m0;
    cost.m1 = cfg.m1;
    cost.m2 = cfg.m2;
    cost.rho0 = cfg.rho0;
    cost.draw_targets(cfg.episodes, derive_seed(seed, 1));
    return cost;
}

BlolParams blol_params(const RunConfig& cfg) {
    BlolParams p;
    p.lower_budget = cfg.lower_budget;
    p.upper_budget = cfg.upper_budget();
    p.warmup_episodes = cfg.warmup;
    p.curvature = 2.0 * (cfg.m2 + cfg.m0);
    p.dual_weight = cfg.beta;
    p.gradient_clip = cfg.gradient_clip;
    return p;
}

void compute_metrics(std::vector<EpisodeRecord>& records, const BenchmarkResult& benchmark,
                     const ProvisioningCost& cost, const ComparatorWeights& weights) {
    double gap = 0.0, viol = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        if (r.k != i + 1) throw std::invalid_argument("records are not episodes 1..K in order");
        gap += r.episode_cost - benchmark.comparator_cost(cost, weights, r.k);
        const double excess = r.expected_consumption - r.budget;
        if (excess > kViolationTolerance) viol += excess;
        r.cum_gap = gap;
        r.cum_viol = viol;
    }
}

RunResult run_experiment(const RunConfig& cfg, std::uint64_t seed, const ValueCurve* curve,
                         const EpisodeObserver& observer) {
    cfg.validate();
    QueueEnv env(cfg.env);
    const TabularMdp& mdp = env.true_mdp();
    const ProvisioningCost cost = provisioning_cost(cfg, seed);
    const BlolParams params = blol_params(cfg);
    const ComparatorWeights weights{cfg.alpha, cfg.beta};
    Rng rng(derive_seed(seed, 2));

    RunResult result{{}, {}, StabilityMonitor(params, cfg.alpha), 0};
    result.benchmark = curve ? static_oracle(*curve, cost, cfg.episodes, weights)
                             : static_oracle(mdp, cost, cfg.episodes, cfg.lower_budget, cfg.oracle_step, weights);
    result.records.reserve(cfg.episodes);

    BaldeOptions options;
    options.warmup_episodes = cfg.warmup;
    options.delta = cfg.delta;
    options.planned_episodes = cfg.episodes;
    options.lower_budget = cfg.lower_budget;
    options.known_model = cfg.known_model;
    options.radius_scale = cfg.radius_scale;
    options.lazy_resolve = cfg.lazy_resolve;
    options.resolve_budget_threshold = cfg.resolve_threshold;
    options.record_timing = cfg.record_timing;

    std::optional<BaldeLearner> balde;
    std::optional<BudgetController> controller;
    std::optional<QLearner> qlearner;
    std::optional<DecoupledController> decoupled;
    switch (cfg.algorithm.kind) {
        case Algorithm::blol:
            controller.emplace(params);
            [[fallthrough]];
        case Algorithm::fixed_budget:
            balde.emplace(mdp, SafeBaseline::idle(mdp), options);
            break;
        case Algorithm::decoupled:
            qlearner.emplace(mdp.shape());
            decoupled.emplace(params, cfg.alpha);
            break;
    }

    double previous = 0.0;
    for (std::size_t k = 1; k <= cfg.episodes; ++k) {
        double budget = 0.0;
        switch (cfg.algorithm.kind) {
            case Algorithm::blol: budget = controller->budget(); break;
            case Algorithm::fixed_budget: budget = cfg.algorithm.budget; break;
            case Algorithm::decoupled: budget = decoupled->budget(); break;
        }

        EpisodeRecord rec;
        rec.k = k;
        rec.budget = budget;
        std::optional<Policy> policy;
        Trajectory trajectory;
        if (balde) {
            BaldeStep step = balde->run_episode(k, budget, env, rng);
            rec.lambda = step.lambda;
            rec.lp_status = to_string(step.kind);
            rec.solve_ms = step.solve_ms;
            policy = std::move(step.policy);
            trajectory = std::move(step.trajectory);
        } else {
            policy = qlearner->behavior_policy(k);
            trajectory = env.rollout(*policy, k - 1, rng);
            qlearner->update(trajectory);
            rec.lp_status = "none";
        }
        const ValueResult value = evaluate_policy(mdp, *policy);
        rec.expected_loss = value.expected_loss;
        rec.expected_consumption = value.expected_consumption;
        rec.realized_loss = trajectory.total_loss();
        rec.realized_consumption = trajectory.total_consumption();
        rec.provisioning_cost = cost.value(k, budget);
        rec.switching_cost = cfg.alpha * (budget - previous) * (budget - previous);
        rec.episode_cost = rec.provisioning_cost + rec.switching_cost + cfg.beta * rec.expected_loss;
        previous = budget;

        const double gradient = cost.gradient(k, budget);
        if (controller) {
            const double next = controller->update(k, gradient, *rec.lambda);
            result.stability.observe(k, budget, next);
        } else if (decoupled) {
            const double next = decoupled->update(k, gradient);
            result.stability.observe(k, budget, next);
        }
        if (observer) observer(rec, *policy);
        result.records.push_back(std::move(rec));
    }
    compute_metrics(result.records, result.benchmark, cost, weights);
    if (balde) result.lp_solves = balde->lp_solves();
    return result;
}

std::string sweep_file_name(const std::string& dir, const AlgorithmSpec& algorithm, std::uint64_t seed) {
    return (std::filesystem::path(dir) / (algorithm.label() + "_seed" + std::to_string(seed) + ".csv")).string();
}

std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<AlgorithmSpec>& algorithms,
                                 const std::string& out_dir, std::size_t jobs) {
    base.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<SweepCell> cells;
    for (const auto& algorithm : algorithms)
        for (std::uint64_t seed : base.seeds) cells.push_back({algorithm, seed, sweep_file_name(out_dir, algorithm, seed)});

    QueueEnv env(base.env);
    const ValueCurve curve = value_curve(env.true_mdp(), base.lower_budget, base.oracle_step);

    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                RunConfig cfg = base;
                cfg.algorithm = cells[i].algorithm;
                cfg.validate();
                const RunResult result = run_experiment(cfg, cells[i].seed, &curve);
                write_records(cells[i].path, result.records);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return cells;
}

}  // namespace bilevel
