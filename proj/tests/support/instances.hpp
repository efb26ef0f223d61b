#pragma once

// Random tiny instances and brute-force oracles shared by the suites.

#include "bilevel/core.hpp"
#include "bilevel/simplex.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using bilevel::Policy;
using bilevel::Shape;
using bilevel::TabularMdp;

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng, double zero_chance = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = u(rng) < zero_chance ? 0.0 : u(rng) + 1e-3;
        sum += v;
    }
    if (sum == 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (auto& v : p) v /= sum;
    return p;
}

inline TabularMdp random_mdp(Shape shape, std::mt19937_64& rng, double zero_chance = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t T = shape.horizon, S = shape.states, A = shape.actions;
    std::vector<double> kernel, loss(T * S * A), consumption(T * S * A);
    for (std::size_t i = 0; i < T * S * A; ++i) {
        const auto row = random_simplex(S, rng, zero_chance);
        kernel.insert(kernel.end(), row.begin(), row.end());
        loss[i] = u(rng);
        consumption[i] = u(rng);
    }
    return TabularMdp(shape, std::move(kernel), std::move(loss), std::move(consumption), random_simplex(S, rng));
}

inline Policy random_policy(Shape shape, std::mt19937_64& rng) {
    std::vector<double> probs;
    for (std::size_t i = 0; i < shape.horizon * shape.states; ++i) {
        const auto row = random_simplex(shape.actions, rng);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return Policy(shape, std::move(probs));
}

struct Enumerated {
    double loss = 0.0;
    double consumption = 0.0;
    double mass = 0.0;
};

/// Expectation over every (s_0, a_0, ..., s_{T-1}, a_{T-1}, s_T) path.
inline Enumerated enumerate_trajectories(const TabularMdp& mdp, const Policy& pi) {
    Enumerated out;
    const std::size_t T = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    std::function<void(std::size_t, std::size_t, double, double, double)> walk =
        [&](std::size_t t, std::size_t s, double prob, double loss, double cons) {
            if (t == T) {
                out.loss += prob * loss;
                out.consumption += prob * cons;
                out.mass += prob;
                return;
            }
            for (std::size_t a = 0; a < A; ++a) {
                const double pa = prob * pi.prob(t, s, a);
                if (pa == 0.0) continue;
                for (std::size_t next = 0; next < S; ++next) {
                    const double pn = pa * mdp.kernel(t, s, a, next);
                    if (pn == 0.0) continue;
                    walk(t + 1, next, pn, loss + mdp.loss(t, s, a), cons + mdp.consumption(t, s, a));
                }
            }
        };
    for (std::size_t s = 0; s < S; ++s)
        if (mdp.initial(s) > 0.0) walk(0, s, mdp.initial(s), 0.0, 0.0);
    return out;
}

/// Every deterministic Markov policy of the shape.
inline std::vector<Policy> deterministic_policies(Shape shape) {
    const std::size_t slots = shape.horizon * shape.states;
    std::size_t total = 1;
    for (std::size_t i = 0; i < slots; ++i) total *= shape.actions;
    std::vector<Policy> out;
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<std::size_t> choice(slots);
        std::size_t c = code;
        for (auto& x : choice) {
            x = c % shape.actions;
            c /= shape.actions;
        }
        out.push_back(Policy::deterministic(shape, [&](std::size_t t, std::size_t s) {
            return choice[t * shape.states + s];
        }));
    }
    return out;
}

/// Constrained optimum over deterministic policies and their pairwise
/// mixtures; exact for one budget row since an optimal solution mixes at
/// most two deterministic policies in value space.
inline double brute_force_cmdp(const TabularMdp& mdp, double budget) {
    std::vector<std::pair<double, double>> values;  // (loss, consumption)
    for (const auto& pi : deterministic_policies(mdp.shape())) {
        const auto v = bilevel::evaluate_policy(mdp, pi);
        values.emplace_back(v.expected_loss, v.expected_consumption);
    }
    double best = INFINITY;
    for (const auto& [l, d] : values)
        if (d <= budget + 1e-12) best = std::min(best, l);
    for (const auto& [l1, d1] : values)
        for (const auto& [l2, d2] : values) {
            if (!(d1 <= budget && d2 > budget)) continue;
            const double w = (budget - d1) / (d2 - d1);  // weight on the second policy
            best = std::min(best, (1.0 - w) * l1 + w * l2);
        }
    return best;
}

/// Dense LP min c'x, A x (sense) b, 0 <= x <= u (u may be inf).
struct DenseLp {
    std::vector<std::vector<double>> a;
    std::vector<bilevel::RowSense> senses;
    std::vector<double> b, c, upper;

    bilevel::LpProblem to_problem() const {
        bilevel::LpProblem lp;
        for (std::size_t j = 0; j < c.size(); ++j) lp.add_column(c[j], 0.0, upper[j]);
        for (std::size_t i = 0; i < b.size(); ++i) {
            lp.add_row(senses[i], b[i]);
            for (std::size_t j = 0; j < c.size(); ++j)
                if (a[i][j] != 0.0) lp.add_entry(i, j, a[i][j]);
        }
        return lp;
    }
};

/// Brute-force vertex enumeration: every choice of n tight constraints among
/// rows, lower bounds and finite upper bounds; returns +inf if none is feasible.
inline double enumerate_vertices(const DenseLp& lp) {
    const std::size_t n = lp.c.size(), m = lp.b.size();
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(lp.a[i]);
        rhs.push_back(lp.b[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        rows.push_back(e);
        rhs.push_back(0.0);
        if (std::isfinite(lp.upper[j])) {
            rows.push_back(e);
            rhs.push_back(lp.upper[j]);
        }
    }
    const std::size_t total = rows.size();
    double best = INFINITY;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t start, std::size_t depth) {
        if (depth == n) {
            // Gaussian elimination with partial pivoting
            std::vector<std::vector<double>> M(n, std::vector<double>(n + 1));
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t j = 0; j < n; ++j) M[r][j] = rows[pick[r]][j];
                M[r][n] = rhs[pick[r]];
            }
            for (std::size_t col = 0; col < n; ++col) {
                std::size_t piv = col;
                for (std::size_t r = col + 1; r < n; ++r)
                    if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
                if (std::abs(M[piv][col]) < 1e-10) return;
                std::swap(M[piv], M[col]);
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == col) continue;
                    const double f = M[r][col] / M[col][col];
                    for (std::size_t j = col; j <= n; ++j) M[r][j] -= f * M[col][j];
                }
            }
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = M[j][n] / M[j][j];
            for (std::size_t j = 0; j < n; ++j)
                if (x[j] < -1e-9 || x[j] > lp.upper[j] + 1e-9) return;
            for (std::size_t i = 0; i < m; ++i) {
                double act = 0.0;
                for (std::size_t j = 0; j < n; ++j) act += lp.a[i][j] * x[j];
                const double tol = 1e-9 * (1.0 + std::abs(lp.b[i]));
                if (lp.senses[i] == bilevel::RowSense::le && act > lp.b[i] + tol) return;
                if (lp.senses[i] == bilevel::RowSense::ge && act < lp.b[i] - tol) return;
                if (lp.senses[i] == bilevel::RowSense::eq && std::abs(act - lp.b[i]) > tol) return;
            }
            double obj = 0.0;
            for (std::size_t j = 0; j < n; ++j) obj += lp.c[j] * x[j];
            best = std::min(best, obj);
            return;
        }
        for (std::size_t k = start; k < total; ++k) {
            pick[depth] = k;
            choose(k + 1, depth + 1);
        }
    };
    choose(0, 0);
    return best;
}

/// Random bounded LP: a box keeps every instance bounded.
inline DenseLp random_lp(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> sense(0, 5);
    DenseLp lp;
    lp.c.resize(n);
    lp.upper.assign(n, INFINITY);
    for (auto& c : lp.c) c = u(rng);
    for (std::size_t j = 0; j < n; ++j)
        if (sense(rng) < 3) lp.upper[j] = 1.0 + 4.0 * std::abs(u(rng));
    // one box row keeps the feasible set bounded
    lp.a.push_back(std::vector<double>(n, 1.0));
    lp.senses.push_back(bilevel::RowSense::le);
    lp.b.push_back(3.0 + 3.0 * std::abs(u(rng)));
    for (std::size_t i = 1; i < m; ++i) {
        std::vector<double> row(n);
        for (auto& v : row) v = std::abs(u(rng)) < 0.2 ? 0.0 : u(rng);
        const int s = sense(rng);
        lp.senses.push_back(s < 3 ? bilevel::RowSense::le : (s < 5 ? bilevel::RowSense::ge : bilevel::RowSense::eq));
        lp.b.push_back(s == 5 ? 0.5 * u(rng) : u(rng) * 2.0);
        lp.a.push_back(row);
    }
    return lp;
}

}  // namespace testing_support
