#include "bilevel/core.hpp"

#include <cmath>
#include <sstream>

namespace bilevel {

namespace {

std::string shape_text(const Shape& shape) {
    std::ostringstream out;
    out << "(T=" << shape.horizon << ", S=" << shape.states << ", A=" << shape.actions << ")";
    return out.str();
}

void require_positive(const Shape& shape) {
    if (shape.horizon == 0 || shape.states == 0 || shape.actions == 0)
        throw DimensionError("all dimensions must be positive, got " + shape_text(shape));
}

void require_size(const std::vector<double>& table, std::size_t expected, const char* what) {
    if (table.size() != expected) {
        std::ostringstream msg;
        msg << what << " has " << table.size() << " entries, expected " << expected;
        throw DimensionError(msg.str());
    }
}

void require_distribution(const double* first, std::size_t count, const char* what) {
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        if (!(first[i] >= 0.0) || !std::isfinite(first[i]))
            throw ValidationError(std::string(what) + " has a negative or non-finite entry");
        total += first[i];
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << what << " sums to " << total << ", not 1";
        throw ValidationError(msg.str());
    }
}

void require_unit_interval(const std::vector<double>& table, const char* what) {
    for (double v : table)
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(std::string(what) + " entries must lie in [0, 1]");
}

}  // namespace

TabularMdp::TabularMdp(Shape shape, std::vector<double> kernel, std::vector<double> loss,
                       std::vector<double> consumption, std::vector<double> initial)
    : shape_(shape),
      kernel_(std::move(kernel)),
      loss_(std::move(loss)),
      consumption_(std::move(consumption)),
      initial_(std::move(initial)) {
    require_positive(shape_);
    const std::size_t rows = shape_.horizon * shape_.states * shape_.actions;
    require_size(kernel_, rows * shape_.states, "kernel");
    require_size(loss_, rows, "loss");
    require_size(consumption_, rows, "consumption");
    require_size(initial_, shape_.states, "initial distribution");
    for (std::size_t row = 0; row < rows; ++row)
        require_distribution(kernel_.data() + row * shape_.states, shape_.states, "kernel row");
    require_unit_interval(loss_, "loss");
    require_unit_interval(consumption_, "consumption");
    require_distribution(initial_.data(), initial_.size(), "initial distribution");
}

TabularMdp TabularMdp::stationary(std::size_t horizon, std::size_t states, std::size_t actions,
                                  const std::vector<double>& kernel,
                                  const std::vector<double>& loss,
                                  const std::vector<double>& consumption,
                                  std::vector<double> initial) {
    const Shape shape{horizon, states, actions};
    require_positive(shape);
    require_size(kernel, states * actions * states, "stage kernel");
    require_size(loss, states * actions, "stage loss");
    require_size(consumption, states * actions, "stage consumption");
    std::vector<double> k, l, d;
    k.reserve(horizon * kernel.size());
    l.reserve(horizon * loss.size());
    d.reserve(horizon * consumption.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        k.insert(k.end(), kernel.begin(), kernel.end());
        l.insert(l.end(), loss.begin(), loss.end());
        d.insert(d.end(), consumption.begin(), consumption.end());
    }
    return TabularMdp(shape, std::move(k), std::move(l), std::move(d), std::move(initial));
}

Policy::Policy(Shape shape, std::vector<double> probs) : shape_(shape), probs_(std::move(probs)) {
    require_positive(shape_);
    const std::size_t rows = shape_.horizon * shape_.states;
    require_size(probs_, rows * shape_.actions, "policy");
    for (std::size_t row = 0; row < rows; ++row)
        require_distribution(probs_.data() + row * shape_.actions, shape_.actions, "policy row");
}

Policy Policy::uniform(Shape shape) {
    require_positive(shape);
    return Policy(shape, std::vector<double>(shape.horizon * shape.states * shape.actions,
                                             1.0 / static_cast<double>(shape.actions)));
}

Policy Policy::constant_action(Shape shape, std::size_t action) {
    if (action >= shape.actions) throw DimensionError("action index out of range");
    return deterministic(shape, [action](std::size_t, std::size_t) { return action; });
}

OccupancyMeasure::OccupancyMeasure(Shape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
    require_positive(shape_);
    require_size(values_, shape_.horizon * shape_.states * shape_.actions * shape_.states,
                 "occupancy");
    for (double& v : values_) {
        if (!std::isfinite(v)) throw ValidationError("occupancy has a non-finite entry");
        // Solver round-off can leave tiny negatives on zero entries.
        if (v < 0.0) {
            if (v < -1e-7) throw ValidationError("occupancy has a negative entry");
            v = 0.0;
        }
    }
}

double OccupancyMeasure::state_action(std::size_t t, std::size_t s, std::size_t a) const {
    const double* row = values_.data() + ((t * shape_.states + s) * shape_.actions + a) * shape_.states;
    double total = 0.0;
    for (std::size_t next = 0; next < shape_.states; ++next) total += row[next];
    return total;
}

double OccupancyMeasure::state(std::size_t t, std::size_t s) const {
    double total = 0.0;
    for (std::size_t a = 0; a < shape_.actions; ++a) total += state_action(t, s, a);
    return total;
}

double OccupancyMeasure::inner(const std::vector<double>& stage_costs) const {
    require_size(stage_costs, shape_.horizon * shape_.states * shape_.actions, "cost table");
    double total = 0.0;
    for (std::size_t t = 0; t < shape_.horizon; ++t)
        for (std::size_t s = 0; s < shape_.states; ++s)
            for (std::size_t a = 0; a < shape_.actions; ++a)
                total += stage_costs[(t * shape_.states + s) * shape_.actions + a] *
                         state_action(t, s, a);
    return total;
}

double OccupancyMeasure::flow_residual(const std::vector<double>& initial) const {
    require_size(initial, shape_.states, "initial distribution");
    const std::size_t S = shape_.states;
    double worst = 0.0;
    for (std::size_t t = 0; t < shape_.horizon; ++t) {
        double mass = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double out = state(t, s);
            mass += out;
            double in = 0.0;
            if (t == 0) {
                in = initial[s];
            } else {
                for (std::size_t prev = 0; prev < S; ++prev)
                    for (std::size_t a = 0; a < shape_.actions; ++a) in += (*this)(t - 1, prev, a, s);
            }
            worst = std::max(worst, std::abs(out - in));
        }
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    return worst;
}

void require_same_shape(const TabularMdp& mdp, const Policy& policy) {
    if (!(mdp.shape() == policy.shape()))
        throw DimensionError("policy shape " + shape_text(policy.shape()) +
                             " does not match MDP shape " + shape_text(mdp.shape()));
}

ValueResult evaluate_policy(const TabularMdp& mdp, const Policy& policy) {
    require_same_shape(mdp, policy);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    std::vector<double> dist = mdp.initial_distribution();
    std::vector<double> next(S);
    ValueResult value;
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            if (dist[s] == 0.0) continue;
            for (std::size_t a = 0; a < A; ++a) {
                const double w = dist[s] * policy.prob(t, s, a);
                if (w == 0.0) continue;
                value.expected_loss += w * mdp.loss(t, s, a);
                value.expected_consumption += w * mdp.consumption(t, s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += w * mdp.kernel(t, s, a, s2);
            }
        }
        dist.swap(next);
    }
    return value;
}

ValueResult evaluate_policy_backward(const TabularMdp& mdp, const Policy& policy) {
    require_same_shape(mdp, policy);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    std::vector<double> loss_to_go(S, 0.0), cons_to_go(S, 0.0);
    std::vector<double> loss_next(S), cons_next(S);
    for (std::size_t t = mdp.horizon(); t-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double l = 0.0, d = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const double p = policy.prob(t, s, a);
                if (p == 0.0) continue;
                double fl = 0.0, fd = 0.0;
                for (std::size_t s2 = 0; s2 < S; ++s2) {
                    fl += mdp.kernel(t, s, a, s2) * loss_to_go[s2];
                    fd += mdp.kernel(t, s, a, s2) * cons_to_go[s2];
                }
                l += p * (mdp.loss(t, s, a) + fl);
                d += p * (mdp.consumption(t, s, a) + fd);
            }
            loss_next[s] = l;
            cons_next[s] = d;
        }
        loss_to_go.swap(loss_next);
        cons_to_go.swap(cons_next);
    }
    ValueResult value;
    for (std::size_t s = 0; s < S; ++s) {
        value.expected_loss += mdp.initial(s) * loss_to_go[s];
        value.expected_consumption += mdp.initial(s) * cons_to_go[s];
    }
    return value;
}

OccupancyMeasure occupancy_of_policy(const TabularMdp& mdp, const Policy& policy) {
    require_same_shape(mdp, policy);
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    std::vector<double> q(mdp.kernel_table().size(), 0.0);
    std::vector<double> dist = mdp.initial_distribution();
    std::vector<double> next(S);
    for (std::size_t t = 0; t < mdp.horizon(); ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const double w = dist[s] * policy.prob(t, s, a);
                if (w == 0.0) continue;
                for (std::size_t s2 = 0; s2 < S; ++s2) {
                    const double mass = w * mdp.kernel(t, s, a, s2);
                    q[mdp.kernel_index(t, s, a, s2)] = mass;
                    next[s2] += mass;
                }
            }
        }
        dist.swap(next);
    }
    return OccupancyMeasure(mdp.shape(), std::move(q));
}

Policy policy_from_occupancy(const OccupancyMeasure& q) {
    const Shape& shape = q.shape();
    const std::size_t A = shape.actions;
    std::vector<double> probs(shape.horizon * shape.states * A);
    std::vector<double> marginal(A);
    for (std::size_t t = 0; t < shape.horizon; ++t) {
        for (std::size_t s = 0; s < shape.states; ++s) {
            double total = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                marginal[a] = q.state_action(t, s, a);
                total += marginal[a];
            }
            double* row = probs.data() + (t * shape.states + s) * A;
            if (total <= 1e-12) {
                std::fill(row, row + A, 1.0 / static_cast<double>(A));
                continue;
            }
            double written = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                row[a] = marginal[a] / total;
                written += row[a];
            }
            // keep the row exactly stochastic for the validating constructor
            for (std::size_t a = 0; a < A; ++a) row[a] /= written;
        }
    }
    return Policy(shape, std::move(probs));
}

}  // namespace bilevel
