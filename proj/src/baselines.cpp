#include "bilevel/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace bilevel {

QLearner::QLearner(Shape shape, QLearningOptions options)
    : shape_(shape), options_(options), q_(shape.horizon * shape.states * shape.actions, 0.0) {
    if (shape.horizon == 0 || shape.states == 0 || shape.actions == 0)
        throw DimensionError("Q table needs a nonempty shape");
}

double QLearner::exploration(std::size_t k) const {
    return std::max(options_.exploration_floor,
                    std::pow(options_.exploration_decay, static_cast<double>(k)));
}

std::size_t QLearner::greedy_action(std::size_t t, std::size_t s) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < shape_.actions; ++a)
        if (q(t, s, a) < q(t, s, best)) best = a;
    return best;
}

Policy QLearner::greedy_policy() const {
    return Policy::deterministic(shape_, [&](std::size_t t, std::size_t s) { return greedy_action(t, s); });
}

Policy QLearner::behavior_policy(std::size_t k) const {
    const double eps = exploration(k);
    const double spread = eps / static_cast<double>(shape_.actions);
    std::vector<double> probs(q_.size(), spread);
    for (std::size_t t = 0; t < shape_.horizon; ++t)
        for (std::size_t s = 0; s < shape_.states; ++s)
            probs[(t * shape_.states + s) * shape_.actions + greedy_action(t, s)] += 1.0 - eps;
    return Policy(shape_, std::move(probs));
}

void QLearner::update(const Trajectory& trajectory) {
    if (trajectory.steps.size() != shape_.horizon)
        throw DimensionError("trajectory length does not match the horizon");
    const double lr = options_.learning_rate;
    for (std::size_t t = 0; t < shape_.horizon; ++t) {
        const Transition& step = trajectory.steps[t];
        double future = 0.0;
        if (t + 1 < shape_.horizon) future = q(t + 1, step.next_state, greedy_action(t + 1, step.next_state));
        double& entry = q_[(t * shape_.states + step.state) * shape_.actions + step.action];
        entry += lr * (step.loss + future - entry);
    }
}

DecoupledController::DecoupledController(BlolParams params, double switching_weight)
    : params_(params), alpha_(switching_weight), budget_(params.lower_budget) {
    if (!(alpha_ >= 0.0)) throw ConfigError("switching weight must be nonnegative");
    if (!(params_.curvature > 0.0)) throw ConfigError("curvature must be positive");
}

double DecoupledController::update(std::size_t k, double cost_gradient) {
    if (k <= params_.warmup_episodes) return budget_;
    const double eta = 1.0 / (params_.curvature * static_cast<double>(k - params_.warmup_episodes + 1));
    const double g = std::clamp(cost_gradient, -params_.gradient_clip, params_.gradient_clip);
    const double shrink = std::isinf(alpha_) ? 0.0 : 1.0 / (1.0 + 2.0 * alpha_ * eta);
    budget_ = std::clamp(budget_ - eta * g * shrink, params_.lower_budget, params_.upper_budget);
    return budget_;
}

}  // namespace bilevel
