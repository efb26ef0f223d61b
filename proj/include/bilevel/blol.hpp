#pragma once

// Upper-level provisioner: holds the budget at B_0 during warm-up, then takes
// projected steps along grad f_k(b_k) - beta * lambda_k with a 1/k step size.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bilevel {

/// f_k(b) = m1 b + m2 (b - rho_k)^2 + m0 (b - rho_0)^2.
struct ProvisioningCost {
    double m0 = 0.25;
    double m1 = 0.01;
    double m2 = 0.05;
    double rho0 = 5.0;
    std::vector<double> rho;  // rho[k - 1] for episode k

    /// rho_k = 5 + 0.5 sin(2 pi k / 2000) + N(0, 0.1^2), drawn from `seed`.
    void draw_targets(std::size_t episodes, std::uint64_t seed);
    /// Constant rho_k = value for every episode.
    void constant_targets(std::size_t episodes, double value);

    double target(std::size_t k) const;
    double value(std::size_t k, double budget) const;
    double gradient(std::size_t k, double budget) const;
    /// Strong-convexity modulus 2 (m2 + m0).
    double curvature() const { return 2.0 * (m2 + m0); }
};

struct BlolParams {
    double lower_budget = 2.0;  // B_0
    double upper_budget = 10.0; // T
    std::size_t warmup_episodes = 500;
    double curvature = 0.6;     // theta_g
    double dual_weight = 1.0;   // beta
    double gradient_clip = 50.0;
};

/// clamp(b - eta * clip(grad_f - beta * lambda, -G, G), lo, hi).
double projected_budget_step(double budget, double step, double cost_gradient, double lambda,
                             const BlolParams& params);

class BudgetController {
public:
    explicit BudgetController(BlolParams params);

    double budget() const { return budget_; }
    const BlolParams& params() const { return params_; }

    /// eta_k = 1 / (theta_g (k - K_0 + 1)).
    double step_size(std::size_t k) const;

    /// Update after episode k; a no-op during warm-up. Returns b_{k+1}.
    double update(std::size_t k, double cost_gradient, double lambda);

private:
    BlolParams params_;
    double budget_;
};

}  // namespace bilevel
