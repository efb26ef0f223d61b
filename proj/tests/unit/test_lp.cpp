#include "bilevel/lp.hpp"
#include "instances.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bilevel;
using testing_support::brute_force_cmdp;
using testing_support::random_mdp;

namespace {

double consumption_range_max(const TabularMdp& mdp) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& pi : testing_support::deterministic_policies(mdp.shape())) {
        const double d = evaluate_policy(mdp, pi).expected_consumption;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return lo + 0.5 * (hi - lo);
}

ExtendedLpArtifacts known_step(const TabularMdp& mdp, double budget) {
    return solve_balde_step(ConfidenceSnapshot::exact(mdp), mdp.loss_table(), mdp.consumption_table(),
                            budget, mdp.initial_distribution(), 1e9);
}

// The same model with the agent choosing its successor: action (a, s2) moves to s2 surely.
TabularMdp free_kernel_model(const TabularMdp& mdp) {
    const std::size_t T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    const Shape shape{T, S, A * S};
    std::vector<double> kernel, loss, consumption;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t next = 0; next < S; ++next) {
                    for (std::size_t y = 0; y < S; ++y) kernel.push_back(y == next ? 1.0 : 0.0);
                    loss.push_back(mdp.loss(t, s, a));
                    consumption.push_back(mdp.consumption(t, s, a));
                }
    return TabularMdp(shape, kernel, loss, consumption, mdp.initial_distribution());
}

}  // namespace

TEST_CASE("known-model extended LP matches the brute-force constrained optimum") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 15; ++trial) {
        const TabularMdp mdp = random_mdp({2, 2, 2}, rng, 0.2);
        const double budget = consumption_range_max(mdp);
        const double oracle = brute_force_cmdp(mdp, budget);
        const auto step = known_step(mdp, budget);
        REQUIRE(step.status == LpStatus::optimal);
        CHECK(step.objective == doctest::Approx(oracle).epsilon(1e-8));
        const auto cmdp = solve_known_cmdp(mdp, budget);
        REQUIRE(cmdp.status == LpStatus::optimal);
        CHECK(cmdp.value == doctest::Approx(oracle).epsilon(1e-8));
        // the normalized policy realizes the value and respects the budget
        const auto v = evaluate_policy(mdp, *step.policy);
        CHECK(v.expected_loss == doctest::Approx(oracle).epsilon(1e-7));
        CHECK(v.expected_consumption <= budget + 1e-8);
        CHECK(step.occupancy->flow_residual(mdp.initial_distribution()) <= 1e-9);
    }
}

TEST_CASE("vacuous radii leave only the flow rows") {
    std::mt19937_64 rng(43);
    const TabularMdp mdp = random_mdp({2, 2, 2}, rng);
    ConfidenceSnapshot conf = ConfidenceSnapshot::exact(mdp);
    std::fill(conf.radius.begin(), conf.radius.end(), 1.0);
    ExtendedLpLayout layout;
    const double budget = 1.0;
    build_extended_lp(conf, mdp.loss_table(), mdp.consumption_table(), budget, mdp.initial_distribution(), &layout);
    CHECK(layout.confidence_rows == 0);
    // with every kernel admissible the LP is the CMDP where the agent picks its successor
    const auto step = solve_balde_step(conf, mdp.loss_table(), mdp.consumption_table(), budget,
                                       mdp.initial_distribution(), 1e9);
    REQUIRE(step.status == LpStatus::optimal);
    CHECK(step.objective == doctest::Approx(brute_force_cmdp(free_kernel_model(mdp), budget)).epsilon(1e-8));

    ConfidenceSnapshot exact = ConfidenceSnapshot::exact(mdp);
    build_extended_lp(exact, mdp.loss_table(), mdp.consumption_table(), budget, mdp.initial_distribution(), &layout);
    // zero radius: one equality per interior entry
    CHECK(layout.confidence_rows == 2 * 2 * 2 * 2);
}

TEST_CASE("slack budget has zero dual") {
    std::mt19937_64 rng(47);
    const TabularMdp mdp = random_mdp({3, 3, 2}, rng);
    const auto step = known_step(mdp, 3.0);
    REQUIRE(step.status == LpStatus::optimal);
    CHECK(step.lambda == 0.0);
    double unconstrained = INFINITY;
    for (const auto& pi : testing_support::deterministic_policies(mdp.shape()))
        unconstrained = std::min(unconstrained, evaluate_policy(mdp, pi).expected_loss);
    CHECK(step.objective == doctest::Approx(unconstrained).epsilon(1e-9));
    CHECK_THROWS_AS(known_step(mdp, 3.5), BudgetError);
    CHECK_THROWS_AS(known_step(mdp, -0.1), BudgetError);
}

TEST_CASE("budget dual is bracketed by one-sided finite differences") {
    std::mt19937_64 rng(53);
    const double eps = 1e-4;
    int binding = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const TabularMdp mdp = random_mdp({2, 2, 2}, rng);
        const double b = consumption_range_max(mdp);
        const auto at = solve_known_cmdp(mdp, b);
        const auto up = solve_known_cmdp(mdp, b + eps);
        const auto down = solve_known_cmdp(mdp, b - eps);
        REQUIRE(at.status == LpStatus::optimal);
        REQUIRE(down.status == LpStatus::optimal);
        const double right = -(up.value - at.value) / eps;
        const double left = -(at.value - down.value) / eps;
        const auto step = known_step(mdp, b);
        CHECK(step.raw_dual >= right - 1e-6);
        CHECK(step.raw_dual <= left + 1e-6);
        CHECK(at.lambda >= right - 1e-6);
        CHECK(at.lambda <= left + 1e-6);
        if (step.raw_dual > 1e-6) ++binding;
        // value curve is nonincreasing and convex here
        CHECK(up.value <= at.value + 1e-12);
        CHECK(at.value <= down.value + 1e-12);
        CHECK(left >= right - 1e-6);
    }
    CHECK(binding > 0);
}

TEST_CASE("budget usage screen agrees with the LP status") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int feasible = 0, infeasible = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const TabularMdp mdp = random_mdp({2, 3, 2}, rng, 0.3);
        ConfidenceSnapshot conf = ConfidenceSnapshot::exact(mdp);
        const double scale = 0.3 * u(rng);
        for (auto& r : conf.radius) r = u(rng) < 0.3 ? 0.0 : scale * u(rng);
        // shift centres so some boxes become empty or one-sided
        for (auto& p : conf.p_hat) p = std::clamp(p + 0.1 * (u(rng) - 0.5), 0.0, 1.0);
        const double usage = minimum_budget_usage(conf, mdp.consumption_table(), mdp.initial_distribution());
        for (double b : {0.2, 0.5, 0.9, 1.3, 1.8}) {
            if (std::isfinite(usage) && std::abs(usage - b) < 1e-6) continue;
            const auto step = solve_balde_step(conf, mdp.loss_table(), mdp.consumption_table(), b,
                                               mdp.initial_distribution(), 1e9);
            const bool screen = usage <= b;
            CHECK(screen == (step.status == LpStatus::optimal));
            if (step.status == LpStatus::optimal) {
                ++feasible;
                CHECK(step.occupancy->inner(mdp.consumption_table()) <= b + 1e-8);
                CHECK(step.lambda >= 0.0);
            } else {
                ++infeasible;
            }
        }
    }
    CHECK(feasible > 0);
    CHECK(infeasible > 0);
}

TEST_CASE("screen equals the exact minimum consumption on a known model") {
    std::mt19937_64 rng(61);
    const TabularMdp mdp = random_mdp({3, 2, 2}, rng);
    double best = INFINITY;
    for (const auto& pi : testing_support::deterministic_policies(mdp.shape()))
        best = std::min(best, evaluate_policy(mdp, pi).expected_consumption);
    CHECK(minimum_budget_usage(ConfidenceSnapshot::exact(mdp), mdp.consumption_table(),
                               mdp.initial_distribution()) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("value curve is monotone and convex on a grid") {
    std::mt19937_64 rng(67);
    const TabularMdp mdp = random_mdp({3, 3, 2}, rng);
    std::vector<double> values;
    for (int i = 0; i <= 15; ++i) {
        const auto sol = solve_known_cmdp(mdp, std::min(3.0, 1.5 + 0.1 * i));
        if (sol.status == LpStatus::optimal) values.push_back(sol.value);
    }
    REQUIRE(values.size() >= 3);
    for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] <= values[i - 1] + 1e-10);
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        CHECK(values[i - 1] + values[i + 1] - 2.0 * values[i] >= -1e-9);
}
