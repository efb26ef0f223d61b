#pragma once

// Visit counts, empirical transition estimates and empirical-Bernstein
// confidence radii around them.

#include "bilevel/core.hpp"
#include "bilevel/env.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace bilevel {

/// log(2 S A T K / delta).
double confidence_log_term(const Shape& shape, std::size_t planned_episodes, double delta);

/// sqrt(4 p(1-p) L / (n v 1)) + (14 L / 3) / (n v 1), clipped to [0, 1].
double bernstein_radius(double p_hat, std::size_t count, double log_term);

class ConfidenceModel {
public:
    ConfidenceModel(Shape shape, double delta, std::size_t planned_episodes);

    const Shape& shape() const { return shape_; }
    double delta() const { return delta_; }
    std::size_t planned_episodes() const { return planned_episodes_; }
    double log_term() const { return log_term_; }
    std::size_t episodes_recorded() const { return episodes_; }

    /// Adds every transition of the trajectory (stage index = position).
    void update(const Trajectory& trajectory);
    void add_transition(std::size_t t, std::size_t s, std::size_t a, std::size_t next);

    std::uint64_t count(std::size_t t, std::size_t s, std::size_t a) const {
        return pair_counts_[pair_index(t, s, a)];
    }
    std::uint64_t count(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const {
        return triple_counts_[pair_index(t, s, a) * shape_.states + next];
    }

    /// n(t, s, a) laid out like TabularMdp costs.
    const std::vector<std::uint64_t>& pair_counts() const { return pair_counts_; }

    /// p_hat(t, s, a, s2) = n(t, s, a, s2) / (n(t, s, a) v 1), laid out like TabularMdp.
    std::vector<double> empirical_kernel() const;
    /// Entry-wise radii beta(t, s, a, s2).
    std::vector<double> radii() const;
    /// beta(t, s, a) = sum over s2 of beta(t, s, a, s2), laid out like TabularMdp costs.
    std::vector<double> radius_sums() const;

    /// Text dump: header line then "t s a s2 n" rows for nonzero counts.
    void write_counts(std::ostream& out) const;
    static ConfidenceModel read_counts(std::istream& in);

private:
    std::size_t pair_index(std::size_t t, std::size_t s, std::size_t a) const {
        return (t * shape_.states + s) * shape_.actions + a;
    }

    Shape shape_;
    double delta_;
    std::size_t planned_episodes_;
    double log_term_;
    std::size_t episodes_ = 0;
    std::vector<std::uint64_t> pair_counts_;
    std::vector<std::uint64_t> triple_counts_;
};

}  // namespace bilevel
