#include "bilevel/balde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bilevel {

SafeBaseline SafeBaseline::idle(const TabularMdp& mdp) {
    Policy policy = Policy::constant_action(mdp.shape(), 0);
    const double consumption = evaluate_policy(mdp, policy).expected_consumption;
    return {std::move(policy), consumption};
}

ShapedCosts shaped_costs(const std::vector<double>& loss, const std::vector<double>& consumption,
                         const std::vector<double>& radius_sums, std::size_t horizon,
                         double budget, double baseline_consumption) {
    if (loss.size() != consumption.size() || loss.size() != radius_sums.size())
        throw DimensionError("shaped_costs: table sizes differ");
    if (!(budget > baseline_consumption))
        throw BudgetError("shaped_costs: budget " + std::to_string(budget) +
                          " must exceed the baseline consumption " +
                          std::to_string(baseline_consumption));
    const double T = static_cast<double>(horizon);
    const double bonus = T * T / (budget - baseline_consumption);
    ShapedCosts out;
    out.loss.resize(loss.size());
    out.consumption.resize(loss.size());
    for (std::size_t i = 0; i < loss.size(); ++i) {
        out.loss[i] = loss[i] - bonus * radius_sums[i];
        out.consumption[i] = std::min(T, consumption[i] + T * radius_sums[i]);
    }
    return out;
}

const char* to_string(StepKind kind) {
    switch (kind) {
        case StepKind::warmup: return "warmup";
        case StepKind::optimal: return "optimal";
        case StepKind::infeasible: return "infeasible";
        case StepKind::cached: return "cached";
    }
    return "unknown";
}

BaldeLearner::BaldeLearner(const TabularMdp& true_mdp, SafeBaseline baseline, BaldeOptions options)
    : mdp_(true_mdp),
      baseline_(std::move(baseline)),
      options_(options),
      model_(true_mdp.shape(), options.delta, options.planned_episodes),
      lambda_cap_(0.0) {
    if (baseline_.policy.shape() != mdp_.shape())
        throw DimensionError("baseline policy shape does not match the model");
    const double gap = options_.lower_budget - baseline_.consumption;
    if (!(gap > 0.0))
        throw ConfigError("lower budget B_0 must exceed the baseline consumption");
    lambda_cap_ = static_cast<double>(mdp_.horizon()) / gap;
    if (!(options_.radius_scale >= 0.0)) throw ConfigError("radius scale must be nonnegative");
}

double BaldeLearner::planning_budget(double budget) const {
    if (!options_.lazy_resolve || options_.resolve_budget_threshold <= 0.0) return budget;
    // round down onto a grid anchored at B_0 so the plan stays feasible for `budget`
    const double step = options_.resolve_budget_threshold;
    const double cells = std::floor((budget - options_.lower_budget) / step + 1e-9);
    return std::min(budget, options_.lower_budget + cells * step);
}

bool BaldeLearner::should_resolve(double planned) const {
    if (!options_.lazy_resolve || !cached_) return true;
    if (planned != cached_->budget) return true;
    if (options_.known_model) return false;
    const auto& counts = model_.pair_counts();
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] >= 2 * std::max<std::uint64_t>(1, cached_->counts[i])) return true;
    return false;
}

BaldeStep BaldeLearner::plan(std::size_t k, double budget) {
    const double T = static_cast<double>(mdp_.horizon());
    if (!std::isfinite(budget) || budget < options_.lower_budget || budget > T)
        throw BudgetError("budget " + std::to_string(budget) + " outside [B_0, T]");
    BaldeStep step{baseline_.policy, 0.0, StepKind::warmup, {}, 0.0};
    if (k <= options_.warmup_episodes) return step;

    const double planned = planning_budget(budget);
    if (!should_resolve(planned)) {
        step.policy = cached_->policy;
        step.lambda = cached_->lambda;
        step.kind = StepKind::cached;
        return step;
    }

    const auto start = std::chrono::steady_clock::now();
    ConfidenceSnapshot conf = options_.known_model ? ConfidenceSnapshot::exact(mdp_)
                                                   : ConfidenceSnapshot::from_model(model_);
    if (options_.radius_scale != 1.0)
        for (double& r : conf.radius) r *= options_.radius_scale;
    const ShapedCosts costs = shaped_costs(mdp_.loss_table(), mdp_.consumption_table(),
                                           conf.radius_sums(), mdp_.horizon(), planned,
                                           baseline_.consumption);
    const double usage = minimum_budget_usage(conf, costs.consumption, mdp_.initial_distribution());
    step.kind = StepKind::infeasible;
    step.lambda = lambda_cap_;
    if (usage <= planned + 1e-9 * (1.0 + planned)) {
        ++lp_solves_;
        ExtendedLpArtifacts lp;
        if (options_.known_model) {
            const CmdpSolution known = solve_known_cmdp(mdp_, planned, options_.simplex);
            lp.status = known.status;
            lp.lambda = std::clamp(known.lambda, 0.0, lambda_cap_);
            lp.policy = known.policy;
        } else {
            lp = solve_balde_step(conf, costs.loss, costs.consumption, planned,
                                  mdp_.initial_distribution(), lambda_cap_, options_.simplex);
        }
        if (lp.status == LpStatus::optimal) {
            step.kind = StepKind::optimal;
            step.policy = *lp.policy;
            step.lambda = lp.lambda;
        }
    }
    if (options_.record_timing)
        step.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    // only optimal plans are reused; the fallback is re-screened every episode
    if (step.kind == StepKind::optimal && options_.lazy_resolve)
        cached_ = Cached{step.policy, step.lambda, step.kind, planned, model_.pair_counts()};
    else
        cached_.reset();
    return step;
}

BaldeStep BaldeLearner::run_episode(std::size_t k, double budget, QueueEnv& env, Rng& rng) {
    BaldeStep step = plan(k, budget);
    step.trajectory = env.rollout(step.policy, k - 1, rng);
    model_.update(step.trajectory);
    return step;
}

}  // namespace bilevel
