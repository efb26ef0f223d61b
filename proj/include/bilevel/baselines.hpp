#pragma once

// Comparison learners: tabular Q-learning on the stage loss (budget-blind) and
// the decoupled upper level that descends f_k plus the switching penalty.

#include "bilevel/blol.hpp"
#include "bilevel/core.hpp"
#include "bilevel/env.hpp"

#include <vector>

namespace bilevel {

struct QLearningOptions {
    double learning_rate = 0.1;
    double exploration_floor = 0.05;
    double exploration_decay = 0.995;
};

/// Horizon-indexed Q table for loss minimization, Q initialized to 0.
class QLearner {
public:
    QLearner(Shape shape, QLearningOptions options = {});

    const Shape& shape() const { return shape_; }
    double q(std::size_t t, std::size_t s, std::size_t a) const {
        return q_[(t * shape_.states + s) * shape_.actions + a];
    }
    const std::vector<double>& table() const { return q_; }

    /// eps_k = max(floor, decay^k).
    double exploration(std::size_t k) const;
    /// Greedy action, ties toward the lower index.
    std::size_t greedy_action(std::size_t t, std::size_t s) const;
    Policy greedy_policy() const;
    /// (1 - eps) greedy + eps uniform.
    Policy behavior_policy(std::size_t k) const;

    /// One sweep of Q(t,s,a) += lr (l + min_a' Q(t+1,s',a') - Q(t,s,a)) along the trajectory.
    void update(const Trajectory& trajectory);

private:
    Shape shape_;
    QLearningOptions options_;
    std::vector<double> q_;
};

/// Decoupled upper level: warm-up at B_0, then the proximal step
/// b_{k+1} = clamp(b_k - eta_k g / (1 + 2 alpha eta_k)), g = clip(grad f_k(b_k)),
/// which minimizes the linearized cost plus alpha (b - b_k)^2 plus the usual
/// 1/(2 eta) proximity term. alpha -> infinity freezes the budget.
class DecoupledController {
public:
    DecoupledController(BlolParams params, double switching_weight);

    double budget() const { return budget_; }
    double update(std::size_t k, double cost_gradient);

private:
    BlolParams params_;
    double alpha_;
    double budget_;
};

}  // namespace bilevel
