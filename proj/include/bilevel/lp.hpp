#pragma once

// Occupancy-measure linear programs: the extended LP over augmented occupancies
// q_t(s, a, s2) with confidence-set rows, and the known-model CMDP LP over
// state-action occupancies. The budget row is always row 0 and is the
// designated row whose dual is reported as lambda.

#include "bilevel/core.hpp"
#include "bilevel/estimation.hpp"
#include "bilevel/simplex.hpp"

#include <optional>
#include <vector>

namespace bilevel {

/// Immutable view of a confidence set: centre p_hat and entry-wise radius.
struct ConfidenceSnapshot {
    Shape shape;
    std::vector<double> p_hat;   // laid out like TabularMdp::kernel_table()
    std::vector<double> radius;  // same layout

    static ConfidenceSnapshot from_model(const ConfidenceModel& model);
    /// Zero-radius set centred on the true kernel.
    static ConfidenceSnapshot exact(const TabularMdp& mdp);
    /// beta(t, s, a) = sum over s2 of radius, laid out like TabularMdp costs.
    std::vector<double> radius_sums() const;
};

struct ExtendedLpLayout {
    Shape shape;
    std::size_t budget_row = 0;
    std::size_t first_flow_row = 1;
    std::size_t first_confidence_row = 0;
    std::size_t confidence_rows = 0;

    std::size_t column(std::size_t t, std::size_t s, std::size_t a, std::size_t next) const {
        return ((t * shape.states + s) * shape.actions + a) * shape.states + next;
    }
    std::size_t flow_row(std::size_t t, std::size_t s) const {
        return first_flow_row + t * shape.states + s;
    }
};

class BudgetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Builds the extended LP. Confidence rows whose bound is vacuous
/// (p_hat + beta >= 1 upper, p_hat - beta <= 0 lower) are omitted; a zero
/// radius strictly inside (0, 1) yields one equality row instead of two.
LpProblem build_extended_lp(const ConfidenceSnapshot& conf, const std::vector<double>& l_bar,
                            const std::vector<double>& d_bar, double budget,
                            const std::vector<double>& initial,
                            ExtendedLpLayout* layout = nullptr);

/// Smallest expected shaped consumption over every Markov policy and every
/// kernel in the confidence box, by backward induction with a greedy inner
/// step. The extended LP is feasible at budget b exactly when this is <= b.
/// Returns +inf when no policy keeps the occupancy inside nonempty boxes.
double minimum_budget_usage(const ConfidenceSnapshot& conf, const std::vector<double>& d_bar,
                            const std::vector<double>& initial);

/// Known-model CMDP LP over w_t(s, a); columns follow TabularMdp::cost_index.
LpProblem build_cmdp_lp(const TabularMdp& mdp, double budget);

struct ExtendedLpArtifacts {
    LpStatus status = LpStatus::infeasible;
    std::optional<OccupancyMeasure> occupancy;
    std::optional<Policy> policy;
    double lambda = 0.0;      // clipped to [0, lambda_cap]
    double raw_dual = 0.0;    // unclipped dual of the budget row
    double objective = 0.0;
    std::size_t rows = 0;
    std::size_t iterations = 0;
    double solve_ms = 0.0;
};

/// build -> solve -> normalize. Infeasible or unbounded LPs are returned as-is.
ExtendedLpArtifacts solve_balde_step(const ConfidenceSnapshot& conf,
                                     const std::vector<double>& l_bar,
                                     const std::vector<double>& d_bar, double budget,
                                     const std::vector<double>& initial, double lambda_cap,
                                     const SimplexOptions& options = {});

struct CmdpSolution {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;   // L*(b)
    double lambda = 0.0;  // dual of the budget row
    std::optional<Policy> policy;
};

/// Optimal constrained loss min { V_l(pi) : V_d(pi) <= budget } on a known model.
CmdpSolution solve_known_cmdp(const TabularMdp& mdp, double budget,
                              const SimplexOptions& options = {});

}  // namespace bilevel
