#include "bilevel/blol.hpp"

#include "bilevel/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace bilevel {

void ProvisioningCost::draw_targets(std::size_t episodes, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1);
    rho.resize(episodes);
    for (std::size_t k = 1; k <= episodes; ++k)
        rho[k - 1] = 5.0 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / 2000.0) + noise(rng);
}

void ProvisioningCost::constant_targets(std::size_t episodes, double value) {
    rho.assign(episodes, value);
}

double ProvisioningCost::target(std::size_t k) const {
    if (k == 0 || k > rho.size())
        throw std::out_of_range("provisioning target for episode " + std::to_string(k) + " not drawn");
    return rho[k - 1];
}

double ProvisioningCost::value(std::size_t k, double b) const {
    const double r = target(k);
    return m1 * b + m2 * (b - r) * (b - r) + m0 * (b - rho0) * (b - rho0);
}

double ProvisioningCost::gradient(std::size_t k, double b) const {
    return m1 + 2.0 * m2 * (b - target(k)) + 2.0 * m0 * (b - rho0);
}

BudgetController::BudgetController(BlolParams params) : params_(params), budget_(params.lower_budget) {
    if (!(params_.lower_budget < params_.upper_budget))
        throw ConfigError("budget interval is empty");
    if (!(params_.curvature > 0.0)) throw ConfigError("curvature must be positive");
    if (!(params_.gradient_clip > 0.0)) throw ConfigError("gradient clip must be positive");
}

double BudgetController::step_size(std::size_t k) const {
    if (k < params_.warmup_episodes) return 0.0;
    return 1.0 / (params_.curvature * static_cast<double>(k - params_.warmup_episodes + 1));
}

double projected_budget_step(double budget, double step, double cost_gradient, double lambda,
                             const BlolParams& params) {
    const double g = params.gradient_clip;
    const double direction = std::clamp(cost_gradient - params.dual_weight * lambda, -g, g);
    return std::clamp(budget - step * direction, params.lower_budget, params.upper_budget);
}

double BudgetController::update(std::size_t k, double cost_gradient, double lambda) {
    if (k <= params_.warmup_episodes) return budget_;
    budget_ = projected_budget_step(budget_, step_size(k), cost_gradient, lambda, params_);
    return budget_;
}

}  // namespace bilevel
