#pragma once

// Sparse LP in bounded general form and a primal revised simplex solver that
// returns vertex duals.
//
//   minimize    c'x
//   subject to  a_i'x  (<=, =, >=)  b_i      for every row i
//               l <= x <= u
//
// Dual sign convention: duals[i] is the decrease of the optimal objective per
// unit increase of b_i. A binding <= row of a minimization therefore has a
// nonnegative dual, a binding >= row a nonpositive one.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilevel {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { le, eq, ge };
enum class LpStatus { optimal, infeasible, unbounded };

const char* to_string(LpStatus status);
const char* to_string(RowSense sense);

/// Numerical failure inside the solver (singular basis, iteration limit).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LpEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

struct LpProblem {
    std::vector<double> objective;
    std::vector<double> col_lower;
    std::vector<double> col_upper;
    std::vector<RowSense> senses;
    std::vector<double> rhs;
    std::vector<LpEntry> entries;
    std::optional<std::size_t> designated_row;

    std::size_t num_rows() const { return rhs.size(); }
    std::size_t num_cols() const { return objective.size(); }

    std::size_t add_column(double cost, double lower = 0.0, double upper = kInfinity);
    std::size_t add_row(RowSense sense, double rhs_value);
    void add_entry(std::size_t row, std::size_t col, double value);

    /// Throws std::invalid_argument on any broken invariant.
    void validate() const;

    /// Row activities a_i'x for a candidate point.
    std::vector<double> row_activity(const std::vector<double>& x) const;
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> primal;
    std::vector<double> duals;
    std::vector<double> reduced_costs;
    double objective = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::size_t iterations = 0;
    std::size_t phase_one_iterations = 0;
    std::size_t bland_iterations = 0;

    bool optimal() const { return status == LpStatus::optimal; }
};

struct SimplexOptions {
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-9;
    double pivot_tolerance = 1e-9;
    std::size_t refactor_interval = 64;
    /// Iteration count after which Bland's rule stays on; 0 picks 5 (m + n).
    std::size_t bland_after = 0;
    /// Hard limit; 0 picks 50 (m + n) + 10000.
    std::size_t max_iterations = 0;
};

LpSolution solve(const LpProblem& problem, const SimplexOptions& options = {});

/// Sparse text dump:
///   lp <rows> <cols> [designated <row> | designated -]
///   senses <L|E|G ...>
///   rhs <b_1 ... b_m>
///   objective <c_1 ... c_n>
///   bounds <l_1 u_1 ... l_n u_n>        (inf / -inf allowed)
///   entries <count>
///   <row> <col> <coeff>                 (one per line)
void write_lp(std::ostream& out, const LpProblem& problem);
LpProblem read_lp(std::istream& in);

}  // namespace bilevel
