#pragma once

// Best static comparator: one budget b* and the known-model optimal policy
// for it, chosen with hindsight over a budget grid.

#include "bilevel/blol.hpp"
#include "bilevel/core.hpp"
#include "bilevel/simplex.hpp"

#include <optional>
#include <vector>

namespace bilevel {

/// L*(b) on a grid b = B_0, B_0 + step, ..., T (the last point is T).
struct ValueCurve {
    std::vector<double> budgets;
    std::vector<double> values;
    std::vector<Policy> policies;
};

/// Solves the known-model CMDP LP at every grid budget, spread over `threads`
/// workers (0 picks the hardware concurrency). Throws SolverError naming the
/// budget if an LP is not optimal.
ValueCurve value_curve(const TabularMdp& mdp, double lower_budget, double step,
                       std::size_t threads = 0);

struct ComparatorWeights {
    double alpha = 0.5;
    double beta = 1.0;
};

struct BenchmarkResult {
    double b_star = 0.0;
    std::size_t star_index = 0;
    std::optional<Policy> pi_star;
    ValueCurve curve;
    std::vector<double> totals;  // total(b) per grid point
    double total_static = 0.0;   // total(b*)

    /// C_k(b*, pi*) = f_k(b*) + alpha b*^2 [k = 1] + beta L*(b*).
    double comparator_cost(const ProvisioningCost& cost, const ComparatorWeights& w, std::size_t k) const;
};

/// total(b) = sum_k f_k(b) + alpha b^2 + beta K L*(b); argmin over the grid
/// (first minimizer on ties).
BenchmarkResult static_oracle(const ValueCurve& curve, const ProvisioningCost& cost,
                              std::size_t episodes, const ComparatorWeights& weights);
BenchmarkResult static_oracle(const TabularMdp& mdp, const ProvisioningCost& cost,
                              std::size_t episodes, double lower_budget, double step,
                              const ComparatorWeights& weights);

}  // namespace bilevel
