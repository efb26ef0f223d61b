#include "bilevel/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bilevel {

double confidence_log_term(const Shape& shape, std::size_t planned_episodes, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (planned_episodes == 0) throw std::invalid_argument("planned episode count must be positive");
    const double product = 2.0 * static_cast<double>(shape.states) *
                           static_cast<double>(shape.actions) * static_cast<double>(shape.horizon) *
                           static_cast<double>(planned_episodes);
    return std::log(product / delta);
}

double bernstein_radius(double p_hat, std::size_t count, double log_term) {
    const double n = static_cast<double>(std::max<std::size_t>(count, 1));
    const double variance = p_hat * (1.0 - p_hat);
    const double radius =
        std::sqrt(4.0 * variance * log_term / n) + (14.0 * log_term / 3.0) / n;
    return std::clamp(radius, 0.0, 1.0);
}

ConfidenceModel::ConfidenceModel(Shape shape, double delta, std::size_t planned_episodes)
    : shape_(shape),
      delta_(delta),
      planned_episodes_(planned_episodes),
      log_term_(confidence_log_term(shape, planned_episodes, delta)),
      pair_counts_(shape.horizon * shape.states * shape.actions, 0),
      triple_counts_(shape.horizon * shape.states * shape.actions * shape.states, 0) {
    if (shape.horizon == 0 || shape.states == 0 || shape.actions == 0)
        throw DimensionError("confidence model needs positive dimensions");
}

void ConfidenceModel::add_transition(std::size_t t, std::size_t s, std::size_t a, std::size_t next) {
    if (t >= shape_.horizon || s >= shape_.states || a >= shape_.actions || next >= shape_.states)
        throw DimensionError("transition index out of range");
    const std::size_t pair = pair_index(t, s, a);
    ++pair_counts_[pair];
    ++triple_counts_[pair * shape_.states + next];
}

void ConfidenceModel::update(const Trajectory& trajectory) {
    if (trajectory.steps.size() > shape_.horizon)
        throw DimensionError("trajectory longer than the horizon");
    for (const auto& step : trajectory.steps)
        if (step.state >= shape_.states || step.action >= shape_.actions ||
            step.next_state >= shape_.states)
            throw DimensionError("trajectory index out of range");
    for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
        const auto& step = trajectory.steps[t];
        add_transition(t, step.state, step.action, step.next_state);
    }
    ++episodes_;
}

std::vector<double> ConfidenceModel::empirical_kernel() const {
    const std::size_t S = shape_.states;
    std::vector<double> p_hat(triple_counts_.size(), 0.0);
    for (std::size_t pair = 0; pair < pair_counts_.size(); ++pair) {
        const double n = static_cast<double>(std::max<std::uint64_t>(pair_counts_[pair], 1));
        for (std::size_t next = 0; next < S; ++next)
            p_hat[pair * S + next] = static_cast<double>(triple_counts_[pair * S + next]) / n;
    }
    return p_hat;
}

std::vector<double> ConfidenceModel::radii() const {
    const std::size_t S = shape_.states;
    std::vector<double> beta(triple_counts_.size());
    for (std::size_t pair = 0; pair < pair_counts_.size(); ++pair) {
        const std::uint64_t n = pair_counts_[pair];
        const double denom = static_cast<double>(std::max<std::uint64_t>(n, 1));
        for (std::size_t next = 0; next < S; ++next) {
            const double p = static_cast<double>(triple_counts_[pair * S + next]) / denom;
            beta[pair * S + next] = bernstein_radius(p, n, log_term_);
        }
    }
    return beta;
}

std::vector<double> ConfidenceModel::radius_sums() const {
    const std::size_t S = shape_.states;
    const std::vector<double> beta = radii();
    std::vector<double> sums(pair_counts_.size(), 0.0);
    for (std::size_t pair = 0; pair < sums.size(); ++pair)
        for (std::size_t next = 0; next < S; ++next) sums[pair] += beta[pair * S + next];
    return sums;
}

void ConfidenceModel::write_counts(std::ostream& out) const {
    out.precision(17);
    out << "counts " << shape_.horizon << ' ' << shape_.states << ' ' << shape_.actions << ' '
        << delta_ << ' ' << planned_episodes_ << ' ' << episodes_ << '\n';
    const std::size_t S = shape_.states;
    for (std::size_t t = 0; t < shape_.horizon; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < shape_.actions; ++a)
                for (std::size_t next = 0; next < S; ++next) {
                    const std::uint64_t n = count(t, s, a, next);
                    if (n > 0) out << t << ' ' << s << ' ' << a << ' ' << next << ' ' << n << '\n';
                }
}

ConfidenceModel ConfidenceModel::read_counts(std::istream& in) {
    std::string tag;
    Shape shape;
    double delta = 0.0;
    std::size_t planned = 0, episodes = 0;
    if (!(in >> tag >> shape.horizon >> shape.states >> shape.actions >> delta >> planned >> episodes) ||
        tag != "counts")
        throw std::runtime_error("malformed counts header");
    ConfidenceModel model(shape, delta, planned);
    std::size_t t, s, a, next;
    std::uint64_t n;
    while (in >> t >> s >> a >> next >> n) {
        if (t >= shape.horizon || s >= shape.states || a >= shape.actions || next >= shape.states)
            throw DimensionError("counts row out of range");
        const std::size_t pair = model.pair_index(t, s, a);
        model.pair_counts_[pair] += n;
        model.triple_counts_[pair * shape.states + next] += n;
    }
    if (!in.eof()) throw std::runtime_error("malformed counts row");
    model.episodes_ = episodes;
    return model;
}

}  // namespace bilevel
