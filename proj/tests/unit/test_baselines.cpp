#include "bilevel/baselines.hpp"

#include <doctest.h>

#include <algorithm>

using namespace bilevel;

namespace {

// Two states, two actions, horizon 3; action a moves to state a surely.
TabularMdp two_state_chain() {
    const std::vector<double> kernel{1, 0, 0, 1, 1, 0, 0, 1};
    const std::vector<double> loss{0.8, 0.3, 0.1, 0.6};
    return TabularMdp::stationary(3, 2, 2, kernel, loss, {0, 0, 0, 0}, {1.0, 0.0});
}

std::vector<double> value_iteration(const TabularMdp& mdp) {
    const std::size_t T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> q(T * S * A, 0.0), v(S, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        std::vector<double> next_v(S, 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            double best = INFINITY;
            for (std::size_t a = 0; a < A; ++a) {
                double value = mdp.loss(t, s, a);
                for (std::size_t y = 0; y < S; ++y) value += mdp.kernel(t, s, a, y) * v[y];
                q[(t * S + s) * A + a] = value;
                best = std::min(best, value);
            }
            next_v[s] = best;
        }
        v = next_v;
    }
    return q;
}

}  // namespace

TEST_CASE("Q-learning recovers the optimal action values") {
    const TabularMdp mdp = two_state_chain();
    const auto oracle = value_iteration(mdp);
    QLearner learner(mdp.shape());
    Rng rng(8);
    std::uniform_int_distribution<std::size_t> coin(0, 1);
    // uniform exploration from both start states so every pair keeps being visited
    for (int episode = 0; episode < 10000; ++episode) {
        Trajectory traj;
        std::size_t s = coin(rng);
        for (std::size_t t = 0; t < 3; ++t) {
            const std::size_t a = coin(rng);
            traj.steps.push_back(Transition{s, a, mdp.loss(t, s, a), 0.0, a});
            s = a;
        }
        learner.update(traj);
    }
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(learner.table()[i] == doctest::Approx(oracle[i]).epsilon(1e-2));
    // greedy policy picks the argmin of the oracle values
    const Policy greedy = learner.greedy_policy();
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < 2; ++s) {
            const std::size_t best = oracle[(t * 2 + s) * 2] <= oracle[(t * 2 + s) * 2 + 1] ? 0 : 1;
            CHECK(greedy.prob(t, s, best) == 1.0);
        }
}

TEST_CASE("exploration schedule and behavior policy") {
    QLearner learner({2, 2, 3});
    CHECK(learner.exploration(0) == 1.0);
    CHECK(learner.exploration(100) == doctest::Approx(std::pow(0.995, 100)));
    CHECK(learner.exploration(5000) == 0.05);
    // all-zero table: ties go to action 0
    CHECK(learner.greedy_action(1, 1) == 0);
    const Policy behavior = learner.behavior_policy(5000);
    CHECK(behavior.prob(0, 0, 0) == doctest::Approx(0.95 + 0.05 / 3.0));
    CHECK(behavior.prob(0, 0, 2) == doctest::Approx(0.05 / 3.0));
}

TEST_CASE("decoupled upper level") {
    BlolParams params;
    params.warmup_episodes = 2;
    DecoupledController frozen(params, INFINITY);
    for (std::size_t k = 1; k < 200; ++k) CHECK(frozen.update(k, -30.0) == 2.0);

    DecoupledController moving(params, 0.5);
    CHECK(moving.update(1, -30.0) == 2.0);
    CHECK(moving.update(2, -30.0) == 2.0);
    const double eta = 1.0 / (0.6 * 2.0);
    CHECK(moving.update(3, -1.0) == doctest::Approx(2.0 + eta / (1.0 + eta)));
    // clipped gradient and projection
    DecoupledController clipped(params, 0.0);
    clipped.update(1, 0.0);
    clipped.update(2, 0.0);
    CHECK(clipped.update(3, -1e6) == 10.0);
}
