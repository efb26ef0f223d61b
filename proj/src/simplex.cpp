#include "bilevel/simplex.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace bilevel {

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

const char* to_string(RowSense sense) {
    switch (sense) {
        case RowSense::le: return "L";
        case RowSense::eq: return "E";
        case RowSense::ge: return "G";
    }
    return "?";
}

std::size_t LpProblem::add_column(double cost, double lower, double upper) {
    objective.push_back(cost);
    col_lower.push_back(lower);
    col_upper.push_back(upper);
    return objective.size() - 1;
}

std::size_t LpProblem::add_row(RowSense sense, double rhs_value) {
    senses.push_back(sense);
    rhs.push_back(rhs_value);
    return rhs.size() - 1;
}

void LpProblem::add_entry(std::size_t row, std::size_t col, double value) {
    entries.push_back({row, col, value});
}

void LpProblem::validate() const {
    const std::size_t n = num_cols();
    const std::size_t m = num_rows();
    if (col_lower.size() != n || col_upper.size() != n)
        throw std::invalid_argument("bound vectors do not match the column count");
    if (senses.size() != m) throw std::invalid_argument("sense vector does not match the row count");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective[j])) throw std::invalid_argument("non-finite objective coefficient");
        if (std::isnan(col_lower[j]) || std::isnan(col_upper[j]) || col_lower[j] > col_upper[j] ||
            col_lower[j] == kInfinity || col_upper[j] == -kInfinity)
            throw std::invalid_argument("invalid bounds on column " + std::to_string(j));
    }
    for (double b : rhs)
        if (!std::isfinite(b)) throw std::invalid_argument("non-finite right-hand side");
    for (const auto& e : entries) {
        if (e.row >= m || e.col >= n) throw std::invalid_argument("entry index out of range");
        if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite constraint coefficient");
    }
    if (designated_row) {
        if (*designated_row >= m) throw std::invalid_argument("designated row out of range");
        if (senses[*designated_row] != RowSense::le)
            throw std::invalid_argument("designated row must have sense <=");
    }
}

std::vector<double> LpProblem::row_activity(const std::vector<double>& x) const {
    std::vector<double> activity(num_rows(), 0.0);
    for (const auto& e : entries) activity[e.row] += e.value * x[e.col];
    return activity;
}

namespace {

enum class VarState : unsigned char { basic, at_lower, at_upper, free_zero };

struct Eta {
    std::size_t pos = 0;
    double pivot = 1.0;
    std::vector<std::size_t> index;
    std::vector<double> value;
};

struct CoveredEntry {
    std::size_t row;
    double value;
};

class RevisedSimplex {
public:
    RevisedSimplex(const LpProblem& problem, const SimplexOptions& options)
        : problem_(problem), opt_(options), m_(problem.num_rows()), n_(problem.num_cols()) {
        build_columns();
        if (opt_.bland_after == 0) opt_.bland_after = 5 * (m_ + n_) + 100;
        if (opt_.max_iterations == 0) opt_.max_iterations = 50 * (m_ + n_) + 10000;
    }

    LpSolution run();

private:
    // variable layout: [0, n) structural, [n, n+m) row logicals, then artificials
    bool is_unit(std::size_t j) const { return j >= n_; }
    std::size_t unit_row(std::size_t j) const { return j < n_ + m_ ? j - n_ : art_row_[j - n_ - m_]; }
    double unit_sign(std::size_t j) const { return j < n_ + m_ ? 1.0 : art_sign_[j - n_ - m_]; }
    bool is_artificial(std::size_t j) const { return j >= n_ + m_; }

    template <class F>
    void for_column(std::size_t j, F&& f) const {
        if (j < n_) {
            for (std::size_t k = col_start_[j]; k < col_start_[j + 1]; ++k) f(col_row_[k], col_val_[k]);
        } else {
            f(unit_row(j), unit_sign(j));
        }
    }

    void build_columns();
    void initial_basis();
    void refactor();
    void recompute_basics();
    std::vector<double> ftran(const std::vector<double>& a) const;
    std::vector<double> btran(std::vector<double> c) const;
    std::vector<double> base_ftran(const std::vector<double>& a) const;
    std::vector<double> base_btran(const std::vector<double>& c) const;
    std::vector<double> row_duals() const;
    double reduced_cost(std::size_t j, const std::vector<double>& y) const;

    enum class PhaseResult { optimal, unbounded };
    PhaseResult iterate(bool phase_one);
    void reset_nonbasics();
    double basic_infeasibility() const;

    static constexpr std::size_t kExpandCycle = 10000;
    double expand_tol_ = 0.0;

    const LpProblem& problem_;
    SimplexOptions opt_;
    std::size_t m_, n_, total_ = 0;

    std::vector<std::size_t> col_start_, col_row_;
    std::vector<double> col_val_;
    std::vector<double> row_scale_;

    std::vector<std::size_t> art_row_;
    std::vector<double> art_sign_;
    std::vector<double> lower_, upper_, cost_;
    std::vector<double> x_;
    std::vector<VarState> state_;
    std::vector<std::size_t> head_;
    std::vector<long> pos_;

    // kernel factorization of the basis
    std::vector<long> covered_by_;            // row -> basis position of its unit column, or -1
    std::vector<double> covered_sign_;        // row -> sign of that unit column at factor time
    std::vector<std::size_t> kernel_rows_;
    std::vector<long> kernel_row_index_;      // row -> kernel index, or -1
    std::vector<std::size_t> kernel_cols_;    // kernel index -> basis position
    std::vector<std::vector<CoveredEntry>> covered_entries_;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;  // transpose() is non-const
    std::vector<Eta> etas_;

    std::size_t iterations_ = 0;
    std::size_t bland_iterations_ = 0;
};

void RevisedSimplex::build_columns() {
    std::vector<std::size_t> count(n_ + 1, 0);
    for (const auto& e : problem_.entries) ++count[e.col + 1];
    for (std::size_t j = 0; j < n_; ++j) count[j + 1] += count[j];
    col_start_ = count;
    col_row_.assign(problem_.entries.size(), 0);
    col_val_.assign(problem_.entries.size(), 0.0);
    std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
    for (const auto& e : problem_.entries) {
        // duplicates are summed later by the dense accumulation paths
        col_row_[fill[e.col]] = e.row;
        col_val_[fill[e.col]] = e.value;
        ++fill[e.col];
    }
    row_scale_.assign(m_, 1.0);
    for (const auto& e : problem_.entries)
        row_scale_[e.row] = std::max(row_scale_[e.row], std::abs(e.value));
}

void RevisedSimplex::initial_basis() {
    total_ = n_ + m_;
    lower_.assign(total_, 0.0);
    upper_.assign(total_, 0.0);
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::at_lower);
    for (std::size_t j = 0; j < n_; ++j) {
        lower_[j] = problem_.col_lower[j];
        upper_[j] = problem_.col_upper[j];
        if (std::isfinite(lower_[j])) {
            x_[j] = lower_[j];
            state_[j] = VarState::at_lower;
        } else if (std::isfinite(upper_[j])) {
            x_[j] = upper_[j];
            state_[j] = VarState::at_upper;
        } else {
            x_[j] = 0.0;
            state_[j] = VarState::free_zero;
        }
    }
    std::vector<double> residual = problem_.rhs;
    for (const auto& e : problem_.entries) residual[e.row] -= e.value * x_[e.col];

    head_.assign(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t s = n_ + i;
        switch (problem_.senses[i]) {
            case RowSense::le: lower_[s] = 0.0; upper_[s] = kInfinity; break;
            case RowSense::ge: lower_[s] = -kInfinity; upper_[s] = 0.0; break;
            case RowSense::eq: lower_[s] = 0.0; upper_[s] = 0.0; break;
        }
        const double r = residual[i];
        if (r >= lower_[s] && r <= upper_[s]) {
            x_[s] = r;
            state_[s] = VarState::basic;
            head_[i] = s;
            continue;
        }
        // logical parks at the violated bound; an artificial absorbs the rest
        const double parked = r < lower_[s] ? lower_[s] : upper_[s];
        x_[s] = parked;
        state_[s] = r < lower_[s] ? VarState::at_lower : VarState::at_upper;
        const double gap = r - parked;
        art_row_.push_back(i);
        art_sign_.push_back(gap > 0.0 ? 1.0 : -1.0);
        lower_.push_back(0.0);
        upper_.push_back(kInfinity);
        x_.push_back(std::abs(gap));
        state_.push_back(VarState::basic);
        head_[i] = total_ + art_row_.size() - 1;
    }
    total_ = n_ + m_ + art_row_.size();
    pos_.assign(total_, -1);
    for (std::size_t p = 0; p < m_; ++p) pos_[head_[p]] = static_cast<long>(p);
}

void RevisedSimplex::refactor() {
    covered_by_.assign(m_, -1);
    covered_sign_.assign(m_, 0.0);
    kernel_cols_.clear();
    for (std::size_t p = 0; p < m_; ++p) {
        const std::size_t j = head_[p];
        if (is_unit(j)) {
            const std::size_t r = unit_row(j);
            if (covered_by_[r] != -1)
                throw SolverError("singular basis: row " + std::to_string(r) +
                                  " is covered by two unit columns");
            covered_by_[r] = static_cast<long>(p);
            covered_sign_[r] = unit_sign(j);
        } else {
            kernel_cols_.push_back(p);
        }
    }
    kernel_rows_.clear();
    kernel_row_index_.assign(m_, -1);
    for (std::size_t i = 0; i < m_; ++i) {
        if (covered_by_[i] == -1) {
            kernel_row_index_[i] = static_cast<long>(kernel_rows_.size());
            kernel_rows_.push_back(i);
        }
    }
    const std::size_t k = kernel_cols_.size();
    if (kernel_rows_.size() != k)
        throw SolverError("singular basis: kernel has " + std::to_string(kernel_rows_.size()) +
                          " rows but " + std::to_string(k) + " columns");
    covered_entries_.assign(k, {});
    etas_.clear();
    if (k == 0) return;
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t c = 0; c < k; ++c) {
        for_column(head_[kernel_cols_[c]], [&](std::size_t row, double value) {
            const long kr = kernel_row_index_[row];
            if (kr >= 0)
                triplets.emplace_back(static_cast<int>(kr), static_cast<int>(c), value);
            else
                covered_entries_[c].push_back({row, value});
        });
    }
    const auto size = static_cast<Eigen::Index>(k);
    Eigen::SparseMatrix<double> kernel(size, size);
    kernel.setFromTriplets(triplets.begin(), triplets.end());
    kernel.makeCompressed();
    lu_.compute(kernel);
    // a zero pivot fails outright; a tiny one shows up as a bad solve of a known system
    bool singular = lu_.info() != Eigen::Success;
    double error = 0.0;
    if (!singular) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(size);
        const Eigen::VectorXd back = lu_.solve(kernel * ones);
        error = (back - ones).cwiseAbs().maxCoeff();
        singular = !(error <= 1e-6);
    }
    if (singular) {
        std::ostringstream msg;
        msg << "numerically singular basis: kernel " << k << "x" << k << ", test solve error " << error
            << ", after " << iterations_ << " iterations";
        throw SolverError(msg.str());
    }
}

std::vector<double> RevisedSimplex::base_ftran(const std::vector<double>& a) const {
    std::vector<double> out(m_, 0.0);
    const std::size_t k = kernel_cols_.size();
    std::vector<double> work = a;
    if (k > 0) {
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
        for (std::size_t r = 0; r < k; ++r) rhs[static_cast<Eigen::Index>(r)] = a[kernel_rows_[r]];
        const Eigen::VectorXd xk = lu_.solve(rhs);
        for (std::size_t c = 0; c < k; ++c) {
            const double v = xk[static_cast<Eigen::Index>(c)];
            out[kernel_cols_[c]] = v;
            if (v != 0.0)
                for (const auto& e : covered_entries_[c]) work[e.row] -= e.value * v;
        }
    }
    for (std::size_t i = 0; i < m_; ++i) {
        const long p = covered_by_[i];
        if (p >= 0) out[static_cast<std::size_t>(p)] = covered_sign_[i] * work[i];
    }
    return out;
}

std::vector<double> RevisedSimplex::base_btran(const std::vector<double>& c) const {
    std::vector<double> y(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
        const long p = covered_by_[i];
        if (p >= 0) y[i] = covered_sign_[i] * c[static_cast<std::size_t>(p)];
    }
    const std::size_t k = kernel_cols_.size();
    if (k == 0) return y;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t col = 0; col < k; ++col) {
        double v = c[kernel_cols_[col]];
        for (const auto& e : covered_entries_[col]) v -= e.value * y[e.row];
        rhs[static_cast<Eigen::Index>(col)] = v;
    }
    const Eigen::VectorXd yk = lu_.transpose().solve(rhs);
    for (std::size_t r = 0; r < k; ++r) y[kernel_rows_[r]] = yk[static_cast<Eigen::Index>(r)];
    return y;
}

std::vector<double> RevisedSimplex::ftran(const std::vector<double>& a) const {
    std::vector<double> x = base_ftran(a);
    for (const auto& eta : etas_) {
        const double xr = x[eta.pos] / eta.pivot;
        x[eta.pos] = xr;
        if (xr == 0.0) continue;
        for (std::size_t k = 0; k < eta.index.size(); ++k) x[eta.index[k]] -= eta.value[k] * xr;
    }
    return x;
}

std::vector<double> RevisedSimplex::btran(std::vector<double> c) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double v = c[it->pos];
        for (std::size_t k = 0; k < it->index.size(); ++k) v -= it->value[k] * c[it->index[k]];
        c[it->pos] = v / it->pivot;
    }
    return base_btran(c);
}

void RevisedSimplex::recompute_basics() {
    std::vector<double> rhs = problem_.rhs;
    for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
        const double v = x_[j];
        for_column(j, [&](std::size_t row, double value) { rhs[row] -= value * v; });
    }
    const std::vector<double> xb = ftran(rhs);
    for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] = xb[p];
}

std::vector<double> RevisedSimplex::row_duals() const {
    std::vector<double> cb(m_);
    for (std::size_t p = 0; p < m_; ++p) cb[p] = cost_[head_[p]];
    return btran(std::move(cb));
}

double RevisedSimplex::reduced_cost(std::size_t j, const std::vector<double>& y) const {
    double d = cost_[j];
    for_column(j, [&](std::size_t row, double value) { d -= y[row] * value; });
    return d;
}

void RevisedSimplex::reset_nonbasics() {
    for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == VarState::at_lower) x_[j] = lower_[j];
        else if (state_[j] == VarState::at_upper) x_[j] = upper_[j];
    }
    refactor();
    recompute_basics();
    expand_tol_ = 0.5 * opt_.feasibility_tolerance;
}

double RevisedSimplex::basic_infeasibility() const {
    double worst = 0.0;
    for (std::size_t p = 0; p < m_; ++p) {
        const std::size_t j = head_[p];
        worst = std::max({worst, lower_[j] - x_[j], x_[j] - upper_[j]});
    }
    return worst;
}

// Primal simplex with Dantzig pricing and the EXPAND ratio test: the working
// feasibility tolerance grows by a small step every iteration so each pivot
// makes strictly positive progress, and among the blocking candidates the
// largest pivot is taken. Nonbasic variables may sit within the working
// tolerance of their bound until the next reset.
RevisedSimplex::PhaseResult RevisedSimplex::iterate(bool phase_one) {
    const double dtol = opt_.optimality_tolerance;
    const double ftol = opt_.feasibility_tolerance;
    const double expand_step = 0.5 * ftol / static_cast<double>(kExpandCycle);
    std::vector<double> column(m_);
    reset_nonbasics();

    for (;;) {
        if (iterations_ >= opt_.max_iterations)
            throw SolverError("iteration limit " + std::to_string(opt_.max_iterations) + " reached");
        if (expand_tol_ >= ftol) {
            reset_nonbasics();
        } else if (etas_.size() >= opt_.refactor_interval) {
            refactor();
            recompute_basics();
        }
        const bool bland = iterations_ > opt_.bland_after;

        const std::vector<double> y = row_duals();
        std::size_t entering = total_;
        double best = 0.0;
        int direction = 0;
        for (std::size_t j = 0; j < total_; ++j) {
            const VarState st = state_[j];
            if (st == VarState::basic || lower_[j] == upper_[j]) continue;
            if (!phase_one && is_artificial(j)) continue;
            const double d = reduced_cost(j, y);
            int dir = 0;
            if ((st == VarState::at_lower || st == VarState::free_zero) && d < -dtol) dir = 1;
            else if ((st == VarState::at_upper || st == VarState::free_zero) && d > dtol) dir = -1;
            if (dir == 0) continue;
            if (bland) {
                entering = j;
                direction = dir;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                entering = j;
                direction = dir;
            }
        }
        if (entering == total_) {
            // optimal for the working bounds; confirm from exact bounds
            if (expand_tol_ > 0.5 * ftol || etas_.size() > 0) {
                reset_nonbasics();
                const double drift = basic_infeasibility();
                if (drift > 1e3 * ftol) {
                    std::ostringstream msg;
                    msg << "basic variables lost feasibility by " << drift << " after " << iterations_
                        << " iterations";
                    throw SolverError(msg.str());
                }
                if (drift <= ftol) {
                    const std::vector<double> y2 = row_duals();
                    bool still_optimal = true;
                    for (std::size_t j = 0; j < total_ && still_optimal; ++j) {
                        const VarState st = state_[j];
                        if (st == VarState::basic || lower_[j] == upper_[j]) continue;
                        if (!phase_one && is_artificial(j)) continue;
                        const double d = reduced_cost(j, y2);
                        if ((st == VarState::at_lower || st == VarState::free_zero) && d < -dtol) still_optimal = false;
                        if ((st == VarState::at_upper || st == VarState::free_zero) && d > dtol) still_optimal = false;
                    }
                    if (!still_optimal) continue;
                }
            }
            return PhaseResult::optimal;
        }

        std::fill(column.begin(), column.end(), 0.0);
        for_column(entering, [&](std::size_t row, double value) { column[row] += value; });
        const std::vector<double> alpha = ftran(column);
        double alpha_norm = 0.0;
        for (double v : alpha) alpha_norm = std::max(alpha_norm, std::abs(v));
        const double ptol = std::max(opt_.pivot_tolerance, 1e-9 * alpha_norm);

        expand_tol_ += expand_step;
        const double tol = expand_tol_;

        // basic p moves by -direction * theta * alpha[p]
        auto exact_ratio = [&](std::size_t p) {
            const double a = direction * alpha[p];
            const std::size_t j = head_[p];
            if (a > 0.0 && std::isfinite(lower_[j])) return (x_[j] - lower_[j]) / a;
            if (a < 0.0 && std::isfinite(upper_[j])) return (upper_[j] - x_[j]) / -a;
            return kInfinity;
        };
        double bound = kInfinity;
        for (std::size_t p = 0; p < m_; ++p) {
            if (std::abs(alpha[p]) <= ptol) continue;
            const double a = direction * alpha[p];
            const std::size_t j = head_[p];
            if (a > 0.0 && std::isfinite(lower_[j]))
                bound = std::min(bound, (x_[j] - lower_[j] + tol) / a);
            else if (a < 0.0 && std::isfinite(upper_[j]))
                bound = std::min(bound, (upper_[j] - x_[j] + tol) / -a);
        }
        long leaving = -1;
        double theta = kInfinity;
        if (std::isfinite(bound)) {
            double largest = 0.0;
            for (std::size_t p = 0; p < m_; ++p)
                if (std::abs(alpha[p]) > ptol && exact_ratio(p) <= bound)
                    largest = std::max(largest, std::abs(alpha[p]));
            for (std::size_t p = 0; p < m_; ++p) {
                if (std::abs(alpha[p]) <= ptol || exact_ratio(p) > bound) continue;
                if (bland) {
                    // smallest index among reasonably sized pivots
                    if (std::abs(alpha[p]) < 1e-3 * largest) continue;
                    if (leaving < 0 || head_[p] < head_[static_cast<std::size_t>(leaving)]) leaving = static_cast<long>(p);
                } else if (std::abs(alpha[p]) == largest && leaving < 0) {
                    leaving = static_cast<long>(p);
                }
            }
            const std::size_t r = static_cast<std::size_t>(leaving);
            theta = std::max(exact_ratio(r), expand_step / std::abs(alpha[r]));
        }

        ++iterations_;
        if (bland) ++bland_iterations_;

        const double range = upper_[entering] - lower_[entering];
        if (range <= theta) {
            if (!std::isfinite(range)) {
                if (phase_one) throw SolverError("phase one reported an unbounded ray");
                return PhaseResult::unbounded;
            }
            const double target = direction > 0 ? upper_[entering] : lower_[entering];
            const double step = target - x_[entering];
            x_[entering] = target;
            for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] -= step * alpha[p];
            state_[entering] = direction > 0 ? VarState::at_upper : VarState::at_lower;
            continue;
        }
        if (leaving < 0) {
            if (phase_one) throw SolverError("phase one reported an unbounded ray");
            return PhaseResult::unbounded;
        }

        const std::size_t r = static_cast<std::size_t>(leaving);
        const std::size_t out = head_[r];
        const double step = direction * theta;
        x_[entering] += step;
        for (std::size_t p = 0; p < m_; ++p) x_[head_[p]] -= step * alpha[p];
        state_[out] = direction * alpha[r] > 0.0 ? VarState::at_lower : VarState::at_upper;
        head_[r] = entering;
        pos_[entering] = static_cast<long>(r);
        pos_[out] = -1;
        state_[entering] = VarState::basic;

        Eta eta;
        eta.pos = r;
        eta.pivot = alpha[r];
        for (std::size_t p = 0; p < m_; ++p) {
            if (p != r && alpha[p] != 0.0) {
                eta.index.push_back(p);
                eta.value.push_back(alpha[p]);
            }
        }
        etas_.push_back(std::move(eta));
    }
}

LpSolution RevisedSimplex::run() {
    initial_basis();
    refactor();
    LpSolution solution;

    if (!art_row_.empty()) {
        cost_.assign(total_, 0.0);
        for (std::size_t k = 0; k < art_row_.size(); ++k) cost_[n_ + m_ + k] = 1.0;
        iterate(true);
        refactor();
        recompute_basics();
        solution.phase_one_iterations = iterations_;
        double infeasibility = 0.0;
        for (std::size_t k = 0; k < art_row_.size(); ++k) infeasibility += std::max(0.0, x_[n_ + m_ + k]);
        double scale = 1.0;
        for (double b : problem_.rhs) scale = std::max(scale, std::abs(b));
        if (infeasibility > 1e-8 * scale) {
            solution.status = LpStatus::infeasible;
            solution.iterations = iterations_;
            solution.bland_iterations = bland_iterations_;
            solution.primal.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
            return solution;
        }
        for (std::size_t k = 0; k < art_row_.size(); ++k) {
            const std::size_t j = n_ + m_ + k;
            upper_[j] = 0.0;
            if (state_[j] != VarState::basic) {
                x_[j] = 0.0;
                state_[j] = VarState::at_lower;
            }
        }
    }

    cost_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = problem_.objective[j];
    const PhaseResult result = iterate(false);
    solution.iterations = iterations_;
    solution.bland_iterations = bland_iterations_;
    if (result == PhaseResult::unbounded) {
        solution.status = LpStatus::unbounded;
        solution.primal.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
        return solution;
    }

    refactor();
    recompute_basics();
    solution.status = LpStatus::optimal;
    solution.primal.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
    const std::vector<double> y = row_duals();

    solution.duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) solution.duals[i] = y[i] == 0.0 ? 0.0 : -y[i];

    // objective and certificate
    solution.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) solution.objective += problem_.objective[j] * x_[j];
    double dual_obj = 0.0;
    for (std::size_t i = 0; i < m_; ++i) dual_obj += problem_.rhs[i] * y[i];
    solution.reduced_costs.resize(n_);
    double dual_residual = 0.0;
    for (std::size_t j = 0; j < total_; ++j) {
        if (is_artificial(j)) continue;
        const double d = j < n_ ? problem_.objective[j] - [&] {
            double s = 0.0;
            for_column(j, [&](std::size_t row, double value) { s += y[row] * value; });
            return s;
        }() : -y[j - n_];
        if (j < n_) solution.reduced_costs[j] = d;
        const double scale = j < n_ ? std::max(1.0, std::abs(problem_.objective[j])) : 1.0;
        double violation = 0.0;
        switch (state_[j]) {
            case VarState::basic: violation = std::abs(d); break;
            case VarState::at_lower: violation = lower_[j] == upper_[j] ? 0.0 : std::max(0.0, -d); break;
            case VarState::at_upper: violation = lower_[j] == upper_[j] ? 0.0 : std::max(0.0, d); break;
            case VarState::free_zero: violation = std::abs(d); break;
        }
        dual_residual = std::max(dual_residual, violation / scale);
        if (state_[j] != VarState::basic && x_[j] != 0.0) dual_obj += d * x_[j];
    }
    solution.dual_objective = dual_obj;
    solution.dual_residual = dual_residual;

    const std::vector<double> activity = problem_.row_activity(solution.primal);
    double primal_residual = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
        const double diff = activity[i] - problem_.rhs[i];
        double violation = 0.0;
        switch (problem_.senses[i]) {
            case RowSense::le: violation = std::max(0.0, diff); break;
            case RowSense::ge: violation = std::max(0.0, -diff); break;
            case RowSense::eq: violation = std::abs(diff); break;
        }
        const double scale = std::max({1.0, row_scale_[i], std::abs(problem_.rhs[i])});
        primal_residual = std::max(primal_residual, violation / scale);
    }
    for (std::size_t j = 0; j < n_; ++j) {
        const double below = std::isfinite(lower_[j]) ? lower_[j] - x_[j] : 0.0;
        const double above = std::isfinite(upper_[j]) ? x_[j] - upper_[j] : 0.0;
        primal_residual = std::max({primal_residual, below, above});
    }
    solution.primal_residual = primal_residual;
    return solution;
}

double parse_bound(const std::string& token) {
    if (token == "inf" || token == "+inf") return kInfinity;
    if (token == "-inf") return -kInfinity;
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument("bad number '" + token + "'");
    return v;
}

void expect(std::istream& in, const char* keyword) {
    std::string token;
    if (!(in >> token) || token != keyword)
        throw std::invalid_argument(std::string("lp dump: expected '") + keyword + "'");
}

}  // namespace

LpSolution solve(const LpProblem& problem, const SimplexOptions& options) {
    problem.validate();
    RevisedSimplex simplex(problem, options);
    return simplex.run();
}

void write_lp(std::ostream& out, const LpProblem& problem) {
    const auto old_precision = out.precision(17);
    out << "lp " << problem.num_rows() << ' ' << problem.num_cols() << " designated ";
    if (problem.designated_row) out << *problem.designated_row; else out << '-';
    out << "\nsenses";
    for (RowSense s : problem.senses) out << ' ' << to_string(s);
    out << "\nrhs";
    for (double b : problem.rhs) out << ' ' << b;
    out << "\nobjective";
    for (double c : problem.objective) out << ' ' << c;
    out << "\nbounds";
    for (std::size_t j = 0; j < problem.num_cols(); ++j) out << ' ' << problem.col_lower[j] << ' ' << problem.col_upper[j];
    out << "\nentries " << problem.entries.size() << '\n';
    for (const auto& e : problem.entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
    out.precision(old_precision);
}

LpProblem read_lp(std::istream& in) {
    LpProblem problem;
    std::size_t rows = 0, cols = 0;
    std::string designated;
    expect(in, "lp");
    if (!(in >> rows >> cols)) throw std::invalid_argument("lp dump: bad dimensions");
    expect(in, "designated");
    in >> designated;
    if (designated != "-") problem.designated_row = std::stoul(designated);
    expect(in, "senses");
    for (std::size_t i = 0; i < rows; ++i) {
        std::string s;
        in >> s;
        if (s == "L") problem.senses.push_back(RowSense::le);
        else if (s == "E") problem.senses.push_back(RowSense::eq);
        else if (s == "G") problem.senses.push_back(RowSense::ge);
        else throw std::invalid_argument("lp dump: bad sense '" + s + "'");
    }
    expect(in, "rhs");
    problem.rhs.resize(rows);
    for (auto& b : problem.rhs) {
        std::string token;
        in >> token;
        b = parse_bound(token);
    }
    expect(in, "objective");
    problem.objective.resize(cols);
    for (auto& c : problem.objective) {
        std::string token;
        in >> token;
        c = parse_bound(token);
    }
    expect(in, "bounds");
    problem.col_lower.resize(cols);
    problem.col_upper.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        std::string lo, up;
        in >> lo >> up;
        problem.col_lower[j] = parse_bound(lo);
        problem.col_upper[j] = parse_bound(up);
    }
    expect(in, "entries");
    std::size_t count = 0;
    in >> count;
    problem.entries.resize(count);
    for (auto& e : problem.entries) {
        std::string value;
        if (!(in >> e.row >> e.col >> value)) throw std::invalid_argument("lp dump: truncated entries");
        e.value = parse_bound(value);
    }
    if (!in) throw std::invalid_argument("lp dump: truncated input");
    problem.validate();
    return problem;
}

}  // namespace bilevel
