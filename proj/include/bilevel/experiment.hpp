#pragma once

// One seeded run of a configured algorithm, metric accumulation against the
// static comparator, and multi-seed sweeps.

#include "bilevel/balde.hpp"
#include "bilevel/blol.hpp"
#include "bilevel/config.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/records.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bilevel {

/// Violations at or below this are treated as floating-point noise.
inline constexpr double kViolationTolerance = 1e-9;

/// Step-size law and switching-series bound of the upper level, checked as
/// budgets stream out of a run.
class StabilityMonitor {
public:
    StabilityMonitor(const BlolParams& params, double alpha);

    /// Called with b_k and b_{k+1} after the update at episode k.
    void observe(std::size_t k, double before, double after);

    bool ok() const { return step_violations_ == 0 && switching_sum_ <= switching_bound_ + 1e-12; }
    std::size_t step_violations() const { return step_violations_; }
    double worst_step_ratio() const { return worst_ratio_; }  // max |db| / (G eta_k)
    double switching_sum() const { return switching_sum_; }     // post-warm-up sum alpha (db)^2
    double switching_bound() const { return switching_bound_; } // alpha G^2 pi^2 / (6 theta_g^2)

private:
    BlolParams params_;
    double alpha_;
    double switching_bound_;
    double switching_sum_ = 0.0;
    double worst_ratio_ = 0.0;
    std::size_t step_violations_ = 0;
};

/// Seed-derived streams so that every algorithm sees the same cost targets.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

ProvisioningCost provisioning_cost(const RunConfig& cfg, std::uint64_t seed);
BlolParams blol_params(const RunConfig& cfg);

/// Fills cum_gap and cum_viol in place from episode costs and budgets.
void compute_metrics(std::vector<EpisodeRecord>& records, const BenchmarkResult& benchmark,
                     const ProvisioningCost& cost, const ComparatorWeights& weights);

struct RunResult {
    std::vector<EpisodeRecord> records;
    BenchmarkResult benchmark;
    StabilityMonitor stability;
    std::size_t lp_solves = 0;
};

/// Optional per-episode hook; also receives the executed policy.
using EpisodeObserver = std::function<void(const EpisodeRecord&, const Policy&)>;

/// Runs cfg.algorithm for one seed. `curve` may carry a precomputed L* curve
/// for the same environment and oracle grid.
RunResult run_experiment(const RunConfig& cfg, std::uint64_t seed, const ValueCurve* curve = nullptr,
                         const EpisodeObserver& observer = {});

/// "<dir>/<label>_seed<seed>.csv".
std::string sweep_file_name(const std::string& dir, const AlgorithmSpec& algorithm, std::uint64_t seed);

struct SweepCell {
    AlgorithmSpec algorithm;
    std::uint64_t seed = 0;
    std::string path;
};

/// Runs every (algorithm, seed) cell, `jobs` at a time, writing one CSV each.
std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<AlgorithmSpec>& algorithms,
                                 const std::string& out_dir, std::size_t jobs);

}  // namespace bilevel
