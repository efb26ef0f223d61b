#pragma once

// Ground-truth episodic MDP, Markov policies, augmented occupancy measures and
// exact evaluation. Stage indices are 0-based internally (t = 0 .. T-1).

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilevel {

/// Raised when tables or indices do not match the declared (T, S, A) shape.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a probability table or cost table violates its invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kProbabilityTolerance = 1e-9;

struct Shape {
    std::size_t horizon = 0;
    std::size_t states = 0;
    std::size_t actions = 0;

    std::size_t stage_pairs() const { return states * actions; }
    bool operator==(const Shape&) const = default;
};

/**
 * Finite-horizon tabular MDP with known stage loss and consumption.
 *
 * Kernels are stored dense and time-indexed: kernel(t, s, a, s2) is
 * P_t(s2 | s, a). Construction validates every row; nothing is renormalized.
 */
class TabularMdp {
public:
    TabularMdp(Shape shape, std::vector<double> kernel, std::vector<double> loss,
               std::vector<double> consumption, std::vector<double> initial);

    /// Replicates a single stage table (S*A*S kernel, S*A costs) over the horizon.
    static TabularMdp stationary(std::size_t horizon, std::size_t states,
                                 std::size_t actions,
                                 const std::vector<double>& kernel,
                                 const std::vector<double>& loss,
                                 const std::vector<double>& consumption,
                                 std::vector<double> initial);

    const Shape& shape() const { return shape_; }
    std::size_t horizon() const { return shape_.horizon; }
    std::size_t num_states() const { return shape_.states; }
    std::size_t num_actions() const { return shape_.actions; }

    double kernel(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const {
        return kernel_[kernel_index(t, s, a, next)];
    }
    double loss(std::size_t t, std::size_t s, std::size_t a) const {
        return loss_[cost_index(t, s, a)];
    }
    double consumption(std::size_t t, std::size_t s, std::size_t a) const {
        return consumption_[cost_index(t, s, a)];
    }
    double initial(std::size_t s) const { return initial_[s]; }

    const std::vector<double>& kernel_table() const { return kernel_; }
    const std::vector<double>& loss_table() const { return loss_; }
    const std::vector<double>& consumption_table() const { return consumption_; }
    const std::vector<double>& initial_distribution() const { return initial_; }

    std::size_t kernel_index(std::size_t t, std::size_t s, std::size_t a,
                             std::size_t next) const {
        return ((t * shape_.states + s) * shape_.actions + a) * shape_.states + next;
    }
    std::size_t cost_index(std::size_t t, std::size_t s, std::size_t a) const {
        return (t * shape_.states + s) * shape_.actions + a;
    }

private:
    Shape shape_;
    std::vector<double> kernel_;
    std::vector<double> loss_;
    std::vector<double> consumption_;
    std::vector<double> initial_;
};

/// Time-indexed stochastic Markov policy, probs(t, s, a) = pi_t(a | s).
class Policy {
public:
    Policy(Shape shape, std::vector<double> probs);

    static Policy uniform(Shape shape);
    /// Deterministic policy choosing action(t, s) at every (t, s).
    template <class Chooser>
    static Policy deterministic(Shape shape, Chooser&& action) {
        std::vector<double> probs(shape.horizon * shape.states * shape.actions, 0.0);
        for (std::size_t t = 0; t < shape.horizon; ++t)
            for (std::size_t s = 0; s < shape.states; ++s)
                probs[(t * shape.states + s) * shape.actions + action(t, s)] = 1.0;
        return Policy(shape, std::move(probs));
    }
    static Policy constant_action(Shape shape, std::size_t action);

    const Shape& shape() const { return shape_; }
    double prob(std::size_t t, std::size_t s, std::size_t a) const {
        return probs_[(t * shape_.states + s) * shape_.actions + a];
    }
    const std::vector<double>& table() const { return probs_; }

    bool operator==(const Policy&) const = default;

private:
    Shape shape_;
    std::vector<double> probs_;
};

/// Augmented occupancy q_t(s, a, s2) = Pr(s_t = s, a_t = a, s_{t+1} = s2).
class OccupancyMeasure {
public:
    OccupancyMeasure(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    double operator()(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const {
        return values_[((t * shape_.states + s) * shape_.actions + a) * shape_.states + next];
    }
    const std::vector<double>& table() const { return values_; }

    /// State-action marginal w_t(s, a) = sum over s2 of q_t(s, a, s2).
    double state_action(std::size_t t, std::size_t s, std::size_t a) const;
    double state(std::size_t t, std::size_t s) const;

    /// Linear functional <r, w> for an S*A*T table indexed like TabularMdp costs.
    double inner(const std::vector<double>& stage_costs) const;

    /// Largest violation of the per-stage mass and flow invariants.
    double flow_residual(const std::vector<double>& initial) const;

private:
    Shape shape_;
    std::vector<double> values_;
};

struct ValueResult {
    double expected_loss = 0.0;
    double expected_consumption = 0.0;
};

/// Exact V_l and V_d by forward propagation of the state distribution.
ValueResult evaluate_policy(const TabularMdp& mdp, const Policy& policy);

/// Same quantities by backward induction; used as a second algebraic route.
ValueResult evaluate_policy_backward(const TabularMdp& mdp, const Policy& policy);

OccupancyMeasure occupancy_of_policy(const TabularMdp& mdp, const Policy& policy);

/// Normalizes q into a policy; rows with mass <= 1e-12 become uniform.
Policy policy_from_occupancy(const OccupancyMeasure& q);

void require_same_shape(const TabularMdp& mdp, const Policy& policy);

}  // namespace bilevel
