#include "bilevel/oracle.hpp"

#include "bilevel/lp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace bilevel {

ValueCurve value_curve(const TabularMdp& mdp, double lower_budget, double step, std::size_t threads) {
    const double T = static_cast<double>(mdp.horizon());
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (!(lower_budget >= 0.0 && lower_budget <= T)) throw BudgetError("lower budget outside [0, T]");
    ValueCurve curve;
    for (std::size_t i = 0;; ++i) {
        const double b = lower_budget + static_cast<double>(i) * step;
        if (b > T - 1e-9 * step) break;
        curve.budgets.push_back(b);
    }
    curve.budgets.push_back(T);
    const std::size_t n = curve.budgets.size();
    curve.values.assign(n, 0.0);
    std::vector<std::optional<Policy>> policies(n);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&](std::size_t first) {
        for (std::size_t i = first; i < n; i += threads) {
            try {
                const CmdpSolution sol = solve_known_cmdp(mdp, curve.budgets[i]);
                if (sol.status != LpStatus::optimal) {
                    std::ostringstream msg;
                    msg << "oracle LP at b = " << curve.budgets[i] << " is " << to_string(sol.status);
                    throw SolverError(msg.str());
                }
                curve.values[i] = sol.value;
                policies[i] = sol.policy;
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    for (auto& p : policies) curve.policies.push_back(std::move(*p));
    return curve;
}

double BenchmarkResult::comparator_cost(const ProvisioningCost& cost, const ComparatorWeights& w,
                                        std::size_t k) const {
    const double first = k == 1 ? w.alpha * b_star * b_star : 0.0;
    return cost.value(k, b_star) + first + w.beta * curve.values[star_index];
}

BenchmarkResult static_oracle(const ValueCurve& curve, const ProvisioningCost& cost,
                              std::size_t episodes, const ComparatorWeights& weights) {
    if (curve.budgets.empty()) throw std::invalid_argument("empty value curve");
    BenchmarkResult out;
    out.curve = curve;
    out.totals.assign(curve.budgets.size(), 0.0);
    for (std::size_t i = 0; i < curve.budgets.size(); ++i) {
        const double b = curve.budgets[i];
        double total = weights.alpha * b * b + weights.beta * static_cast<double>(episodes) * curve.values[i];
        for (std::size_t k = 1; k <= episodes; ++k) total += cost.value(k, b);
        out.totals[i] = total;
    }
    out.star_index = static_cast<std::size_t>(
        std::min_element(out.totals.begin(), out.totals.end()) - out.totals.begin());
    out.b_star = curve.budgets[out.star_index];
    out.total_static = out.totals[out.star_index];
    out.pi_star = curve.policies[out.star_index];
    return out;
}

BenchmarkResult static_oracle(const TabularMdp& mdp, const ProvisioningCost& cost, std::size_t episodes,
                              double lower_budget, double step, const ComparatorWeights& weights) {
    return static_oracle(value_curve(mdp, lower_budget, step), cost, episodes, weights);
}

}  // namespace bilevel
