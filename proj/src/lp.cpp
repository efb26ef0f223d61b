#include "bilevel/lp.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace bilevel {

ConfidenceSnapshot ConfidenceSnapshot::from_model(const ConfidenceModel& model) {
    return {model.shape(), model.empirical_kernel(), model.radii()};
}

ConfidenceSnapshot ConfidenceSnapshot::exact(const TabularMdp& mdp) {
    return {mdp.shape(), mdp.kernel_table(), std::vector<double>(mdp.kernel_table().size(), 0.0)};
}

std::vector<double> ConfidenceSnapshot::radius_sums() const {
    const std::size_t S = shape.states;
    std::vector<double> sums(shape.horizon * S * shape.actions, 0.0);
    for (std::size_t pair = 0; pair < sums.size(); ++pair)
        for (std::size_t next = 0; next < S; ++next) sums[pair] += radius[pair * S + next];
    return sums;
}

namespace {

void require_tables(const Shape& shape, const std::vector<double>& l_bar,
                    const std::vector<double>& d_bar, const std::vector<double>& initial) {
    const std::size_t pairs = shape.horizon * shape.states * shape.actions;
    if (l_bar.size() != pairs || d_bar.size() != pairs)
        throw DimensionError("shaped cost tables do not match (T, S, A)");
    if (initial.size() != shape.states) throw DimensionError("initial distribution has wrong size");
}

void require_budget(double budget, const Shape& shape) {
    if (!std::isfinite(budget) || budget < 0.0 || budget > static_cast<double>(shape.horizon))
        throw BudgetError("budget " + std::to_string(budget) + " outside [0, T]");
}

}  // namespace

LpProblem build_extended_lp(const ConfidenceSnapshot& conf, const std::vector<double>& l_bar,
                            const std::vector<double>& d_bar, double budget,
                            const std::vector<double>& initial, ExtendedLpLayout* layout) {
    const Shape& shape = conf.shape;
    const std::size_t T = shape.horizon, S = shape.states, A = shape.actions;
    require_tables(shape, l_bar, d_bar, initial);
    if (conf.p_hat.size() != T * S * A * S || conf.radius.size() != conf.p_hat.size())
        throw DimensionError("confidence snapshot does not match (T, S, A)");
    require_budget(budget, shape);

    LpProblem lp;
    ExtendedLpLayout lay;
    lay.shape = shape;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t next = 0; next < S; ++next)
                    lp.add_column(l_bar[(t * S + s) * A + a]);

    lay.budget_row = lp.add_row(RowSense::le, budget);
    lp.designated_row = lay.budget_row;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const double d = d_bar[(t * S + s) * A + a];
                if (d != 0.0)
                    for (std::size_t next = 0; next < S; ++next)
                        lp.add_entry(lay.budget_row, lay.column(t, s, a, next), d);
            }

    lay.first_flow_row = lp.num_rows();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            const std::size_t row = lp.add_row(RowSense::eq, t == 0 ? initial[s] : 0.0);
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t next = 0; next < S; ++next)
                    lp.add_entry(row, lay.column(t, s, a, next), 1.0);
            if (t > 0)
                for (std::size_t prev = 0; prev < S; ++prev)
                    for (std::size_t a = 0; a < A; ++a)
                        lp.add_entry(row, lay.column(t - 1, prev, a, s), -1.0);
        }
    }

    // q(s2) - bound * sum_y q(y)  (<= 0 for the upper bound, >= 0 for the lower)
    lay.first_confidence_row = lp.num_rows();
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t next = 0; next < S; ++next) {
                    const std::size_t k = lay.column(t, s, a, next);
                    const double hi = conf.p_hat[k] + conf.radius[k];
                    const double lo = conf.p_hat[k] - conf.radius[k];
                    if (hi == lo && hi > 0.0 && hi < 1.0) {
                        const std::size_t row = lp.add_row(RowSense::eq, 0.0);
                        for (std::size_t y = 0; y < S; ++y)
                            lp.add_entry(row, lay.column(t, s, a, y), (y == next ? 1.0 : 0.0) - hi);
                        continue;
                    }
                    for (const auto& [bound, sense] : {std::pair{hi, RowSense::le},
                                                       std::pair{lo, RowSense::ge}}) {
                        if (sense == RowSense::le && bound >= 1.0) continue;
                        if (sense == RowSense::ge && bound <= 0.0) continue;
                        const std::size_t row = lp.add_row(sense, 0.0);
                        for (std::size_t y = 0; y < S; ++y)
                            lp.add_entry(row, lay.column(t, s, a, y), (y == next ? 1.0 : 0.0) - bound);
                    }
                }
    lay.confidence_rows = lp.num_rows() - lay.first_confidence_row;
    if (layout) *layout = lay;
    return lp;
}

double minimum_budget_usage(const ConfidenceSnapshot& conf, const std::vector<double>& d_bar,
                            const std::vector<double>& initial) {
    const Shape& shape = conf.shape;
    const std::size_t T = shape.horizon, S = shape.states, A = shape.actions;
    if (d_bar.size() != T * S * A || initial.size() != S || conf.p_hat.size() != T * S * A * S ||
        conf.radius.size() != conf.p_hat.size())
        throw DimensionError("budget usage screen: tables do not match (T, S, A)");

    std::vector<double> value(S, 0.0), next_value(S, 0.0);
    std::vector<std::size_t> order(S);
    std::vector<double> lo(S), hi(S);
    for (std::size_t t = T; t-- > 0;) {
        next_value = value;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return next_value[x] < next_value[y]; });
        for (std::size_t s = 0; s < S; ++s) {
            double best = kInfinity;
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t base = ((t * S + s) * A + a) * S;
                double lo_mass = 0.0, hi_mass = 0.0;
                for (std::size_t y = 0; y < S; ++y) {
                    const double h = conf.p_hat[base + y] + conf.radius[base + y];
                    const double l = conf.p_hat[base + y] - conf.radius[base + y];
                    hi[y] = h >= 1.0 ? 1.0 : h;
                    lo[y] = l <= 0.0 ? 0.0 : l;
                    lo_mass += lo[y];
                    hi_mass += hi[y];
                }
                // an empty box forces zero occupancy on this pair
                if (lo_mass > 1.0 + 1e-12 || hi_mass < 1.0 - 1e-12) continue;
                if (!std::isfinite(d_bar[(t * S + s) * A + a])) continue;
                double spare = 1.0 - lo_mass;
                double expected = 0.0;
                bool reachable_infinite = false;
                for (std::size_t y : order) {
                    const double extra = std::min(std::max(spare, 0.0), hi[y] - lo[y]);
                    spare -= extra;
                    const double mass = lo[y] + extra;
                    if (mass <= 0.0) continue;
                    if (!std::isfinite(next_value[y])) {
                        reachable_infinite = true;
                        break;
                    }
                    expected += mass * next_value[y];
                }
                if (reachable_infinite) continue;
                best = std::min(best, d_bar[(t * S + s) * A + a] + expected);
            }
            value[s] = best;
        }
    }
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (initial[s] <= 0.0) continue;
        if (!std::isfinite(value[s])) return kInfinity;
        total += initial[s] * value[s];
    }
    return total;
}

LpProblem build_cmdp_lp(const TabularMdp& mdp, double budget) {
    const std::size_t T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    require_budget(budget, mdp.shape());
    LpProblem lp;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) lp.add_column(mdp.loss(t, s, a));
    const std::size_t budget_row = lp.add_row(RowSense::le, budget);
    lp.designated_row = budget_row;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                if (mdp.consumption(t, s, a) != 0.0)
                    lp.add_entry(budget_row, mdp.cost_index(t, s, a), mdp.consumption(t, s, a));
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            const std::size_t row = lp.add_row(RowSense::eq, t == 0 ? mdp.initial(s) : 0.0);
            for (std::size_t a = 0; a < A; ++a) lp.add_entry(row, mdp.cost_index(t, s, a), 1.0);
            if (t == 0) continue;
            for (std::size_t prev = 0; prev < S; ++prev)
                for (std::size_t a = 0; a < A; ++a) {
                    const double p = mdp.kernel(t - 1, prev, a, s);
                    if (p != 0.0) lp.add_entry(row, mdp.cost_index(t - 1, prev, a), -p);
                }
        }
    }
    return lp;
}

ExtendedLpArtifacts solve_balde_step(const ConfidenceSnapshot& conf,
                                     const std::vector<double>& l_bar,
                                     const std::vector<double>& d_bar, double budget,
                                     const std::vector<double>& initial, double lambda_cap,
                                     const SimplexOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const LpProblem lp = build_extended_lp(conf, l_bar, d_bar, budget, initial);
    const LpSolution solution = solve(lp, options);

    ExtendedLpArtifacts out;
    out.status = solution.status;
    out.rows = lp.num_rows();
    out.iterations = solution.iterations;
    if (solution.optimal()) {
        out.objective = solution.objective;
        out.raw_dual = solution.duals[*lp.designated_row];
        out.lambda = std::clamp(out.raw_dual, 0.0, lambda_cap);
        out.occupancy.emplace(conf.shape, solution.primal);
        out.policy.emplace(policy_from_occupancy(*out.occupancy));
    }
    out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

CmdpSolution solve_known_cmdp(const TabularMdp& mdp, double budget, const SimplexOptions& options) {
    const LpProblem lp = build_cmdp_lp(mdp, budget);
    const LpSolution solution = solve(lp, options);
    CmdpSolution out;
    out.status = solution.status;
    if (!solution.optimal()) return out;
    out.value = solution.objective;
    out.lambda = solution.duals[*lp.designated_row];
    const std::size_t S = mdp.num_states();
    std::vector<double> q(mdp.kernel_table().size(), 0.0);
    for (std::size_t pair = 0; pair < solution.primal.size(); ++pair) {
        const double w = std::max(0.0, solution.primal[pair]);
        for (std::size_t next = 0; next < S; ++next)
            q[pair * S + next] = w * mdp.kernel_table()[pair * S + next];
    }
    out.policy.emplace(policy_from_occupancy(OccupancyMeasure(mdp.shape(), std::move(q))));
    return out;
}

}  // namespace bilevel
