#pragma once

// Lower-level safe learner: warm-up on a safe baseline, then per episode
// refresh the confidence set, shape the costs (pessimistic consumption,
// optimistic loss), solve the extended LP at the current budget and execute
// the normalized policy. Infeasible LPs fall back to the baseline.

#include "bilevel/core.hpp"
#include "bilevel/env.hpp"
#include "bilevel/estimation.hpp"
#include "bilevel/lp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bilevel {

struct SafeBaseline {
    Policy policy;
    double consumption = 0.0;  // V_d of the policy on the true model

    /// "Always action 0": serves nothing, so it consumes nothing in the queue model.
    static SafeBaseline idle(const TabularMdp& mdp);
};

struct ShapedCosts {
    std::vector<double> loss;         // l - T^2 beta / (b - b_base), unclipped
    std::vector<double> consumption;  // min(T, d + T beta)
};

/// `radius_sums` is beta(t, s, a) laid out like TabularMdp costs.
ShapedCosts shaped_costs(const std::vector<double>& loss, const std::vector<double>& consumption,
                         const std::vector<double>& radius_sums, std::size_t horizon,
                         double budget, double baseline_consumption);

struct BaldeOptions {
    std::size_t warmup_episodes = 500;
    double delta = 0.05;
    std::size_t planned_episodes = 5000;  // K in the confidence log term
    double lower_budget = 2.0;            // B_0
    /// Plan on the true kernel with zero radii (sanity and oracle checks).
    bool known_model = false;
    /// Multiplies every confidence radius; 1 is the calibrated set.
    double radius_scale = 1.0;
    /// Plan at the budget rounded down to a multiple of the threshold above
    /// B_0, and reuse the last optimal plan until that grid budget changes or
    /// some pair count has doubled.
    bool lazy_resolve = false;
    double resolve_budget_threshold = 0.05;
    /// Record wall-clock solve times (makes CSVs non-reproducible).
    bool record_timing = false;
    SimplexOptions simplex;
};

enum class StepKind { warmup, optimal, infeasible, cached };
const char* to_string(StepKind kind);

struct BaldeStep {
    Policy policy;
    double lambda = 0.0;
    StepKind kind = StepKind::warmup;
    Trajectory trajectory;
    double solve_ms = 0.0;
};

class BaldeLearner {
public:
    BaldeLearner(const TabularMdp& true_mdp, SafeBaseline baseline, BaldeOptions options);

    /// lambda_cap = T / (B_0 - b_base).
    double lambda_cap() const { return lambda_cap_; }
    const SafeBaseline& baseline() const { return baseline_; }
    const ConfidenceModel& confidence() const { return model_; }
    const BaldeOptions& options() const { return options_; }
    std::size_t lp_solves() const { return lp_solves_; }

    /// Chooses the episode-k policy for budget b (k is 1-based) without acting.
    BaldeStep plan(std::size_t k, double budget);

    /// plan, execute for T slots, and append the trajectory to the history.
    BaldeStep run_episode(std::size_t k, double budget, QueueEnv& env, Rng& rng);

private:
    double planning_budget(double budget) const;
    bool should_resolve(double planned) const;

    const TabularMdp& mdp_;
    SafeBaseline baseline_;
    BaldeOptions options_;
    ConfidenceModel model_;
    double lambda_cap_;
    std::size_t lp_solves_ = 0;

    struct Cached {
        Policy policy;
        double lambda;
        StepKind kind;
        double budget;
        std::vector<std::uint64_t> counts;
    };
    std::optional<Cached> cached_;
};

}  // namespace bilevel
