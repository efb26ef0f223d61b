#include "bilevel/balde.hpp"
#include "instances.hpp"

#include <doctest.h>

#include <numeric>

using namespace bilevel;

namespace {

QueueEnvConfig small_queue() {
    QueueEnvConfig cfg;
    cfg.s_max = 6;
    cfg.horizon = 8;
    return cfg;
}

}  // namespace

TEST_CASE("shaped cost arithmetic") {
    const auto costs = shaped_costs({0.5}, {0.5}, {0.1}, 10, 4.0, 0.0);
    CHECK(costs.loss[0] == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(costs.consumption[0] == doctest::Approx(1.5).epsilon(1e-14));
    const auto none = shaped_costs({0.3, 0.7}, {0.2, 0.9}, {0.0, 0.0}, 10, 4.0, 0.0);
    CHECK(none.loss == std::vector<double>{0.3, 0.7});
    CHECK(none.consumption == std::vector<double>{0.2, 0.9});
    // consumption is capped at T
    CHECK(shaped_costs({0.0}, {0.5}, {3.0}, 10, 4.0, 0.0).consumption[0] == 10.0);
    CHECK_THROWS_AS(shaped_costs({0.5}, {0.5}, {0.1}, 10, 1.0, 1.0), BudgetError);
    CHECK_THROWS_AS(shaped_costs({0.5}, {0.5, 0.1}, {0.1}, 10, 4.0, 0.0), DimensionError);
}

TEST_CASE("shaped costs are pessimistic in consumption and optimistic in loss") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> l(6), d(6), beta(6);
        for (std::size_t i = 0; i < 6; ++i) {
            l[i] = u(rng);
            d[i] = u(rng);
            beta[i] = 3.0 * u(rng);
        }
        const double base = u(rng);
        const auto costs = shaped_costs(l, d, beta, 5, base + 0.01 + 4.0 * u(rng), base);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(costs.consumption[i] >= d[i]);
            CHECK(costs.loss[i] <= l[i]);
        }
    }
}

TEST_CASE("warm-up plays the baseline with a zero multiplier") {
    QueueEnv env(small_queue());
    const SafeBaseline base = SafeBaseline::idle(env.true_mdp());
    CHECK(base.consumption == 0.0);
    BaldeOptions opts;
    opts.warmup_episodes = 3;
    opts.planned_episodes = 10;
    BaldeLearner learner(env.true_mdp(), base, opts);
    CHECK(learner.lambda_cap() == doctest::Approx(8.0 / 2.0));
    Rng rng(1);
    const auto step = learner.run_episode(1, 5.0, env, rng);
    CHECK(step.kind == StepKind::warmup);
    CHECK(step.lambda == 0.0);
    CHECK(step.policy == base.policy);
    CHECK(step.trajectory.steps.size() == 8);
    CHECK_THROWS_AS(learner.plan(4, 1.0), BudgetError);
    CHECK_THROWS_AS(learner.plan(4, 8.5), BudgetError);
}

TEST_CASE("known model with a slack budget minimizes loss") {
    QueueEnv env(small_queue());
    const TabularMdp& mdp = env.true_mdp();
    BaldeOptions opts;
    opts.warmup_episodes = 0;
    opts.known_model = true;
    BaldeLearner learner(mdp, SafeBaseline::idle(mdp), opts);
    const auto step = learner.plan(1, 8.0);
    REQUIRE(step.kind == StepKind::optimal);
    CHECK(step.lambda == 0.0);
    // serving at full rate everywhere is the loss minimizer of the queue
    const Policy full = Policy::constant_action(mdp.shape(), 2);
    CHECK(evaluate_policy(mdp, step.policy).expected_loss ==
          doctest::Approx(evaluate_policy(mdp, full).expected_loss).epsilon(1e-9));

    const auto tight = learner.plan(2, 2.0);
    REQUIRE(tight.kind == StepKind::optimal);
    CHECK(tight.lambda > 0.0);
    CHECK(tight.lambda <= learner.lambda_cap());
    CHECK(evaluate_policy(mdp, tight.policy).expected_consumption <= 2.0 + 1e-9);
}

TEST_CASE("history grows by one visit per stage per episode") {
    QueueEnv env(small_queue());
    BaldeOptions opts;
    opts.warmup_episodes = 5;
    opts.planned_episodes = 20;
    BaldeLearner learner(env.true_mdp(), SafeBaseline::idle(env.true_mdp()), opts);
    Rng rng(3);
    for (std::size_t k = 1; k <= 12; ++k) {
        learner.run_episode(k, 6.0, env, rng);
        const auto& counts = learner.confidence().pair_counts();
        const std::size_t per_stage = counts.size() / 8;
        for (std::size_t t = 0; t < 8; ++t) {
            const auto first = counts.begin() + static_cast<std::ptrdiff_t>(t * per_stage);
            CHECK(std::accumulate(first, first + static_cast<std::ptrdiff_t>(per_stage), std::uint64_t{0}) == k);
        }
    }
}

TEST_CASE("every executed policy respects its budget on the true model") {
    QueueEnv env(small_queue());
    const TabularMdp& mdp = env.true_mdp();
    std::mt19937_64 budget_rng(9);
    std::uniform_real_distribution<double> budget(2.0, 8.0);
    for (double scale : {1.0, 0.02}) {
        BaldeOptions opts;
        opts.warmup_episodes = 100;
        opts.planned_episodes = 300;
        opts.radius_scale = scale;
        BaldeLearner learner(mdp, SafeBaseline::idle(mdp), opts);
        Rng rng(17);
        std::size_t violations = 0, optimal = 0;
        for (std::size_t k = 1; k <= 300; ++k) {
            const double b = budget(budget_rng);
            const auto step = learner.run_episode(k, b, env, rng);
            CHECK(step.lambda >= 0.0);
            CHECK(step.lambda <= learner.lambda_cap());
            if (step.kind == StepKind::optimal) ++optimal;
            if (evaluate_policy(mdp, step.policy).expected_consumption > b + 1e-9) ++violations;
        }
        CHECK(violations == 0);
        // the calibrated set stays infeasible at this sample size; the shrunk one does not
        if (scale < 1.0) CHECK(optimal > 0);
    }
}

TEST_CASE("lazy resolve reuses optimal plans") {
    QueueEnv env(small_queue());
    const TabularMdp& mdp = env.true_mdp();
    BaldeOptions opts;
    opts.warmup_episodes = 0;
    opts.known_model = true;
    opts.lazy_resolve = true;
    BaldeLearner learner(mdp, SafeBaseline::idle(mdp), opts);
    CHECK(learner.plan(1, 4.0).kind == StepKind::optimal);
    CHECK(learner.plan(2, 4.01).kind == StepKind::cached);
    CHECK(learner.plan(3, 3.99).kind == StepKind::optimal);
    CHECK(learner.plan(4, 4.2).kind == StepKind::optimal);
    CHECK(learner.lp_solves() == 3);
}
