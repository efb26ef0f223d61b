#pragma once

// Single-queue slice scheduling environment: backlog dynamics, stage loss,
// resource consumption, Poisson or trace-driven arrivals, and the matching
// ground-truth TabularMdp.

#include "bilevel/core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bilevel {

using Rng = std::mt19937_64;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ArrivalKind { poisson, trace };

struct ArrivalSpec {
    ArrivalKind kind = ArrivalKind::poisson;
    double rate = 1.12;
    std::string trace_path;
    double target_mean = 1.12;
    std::size_t truncation = 9;  // A_max; tail mass of Poisson(1.12) beyond 9 is ~3e-7
};

struct QueueEnvConfig {
    std::size_t s_max = 10;
    std::vector<int> actions{0, 1, 2};
    std::size_t horizon = 10;
    double mu = 0.1;
    double consumption_scale = 2.0;
    ArrivalSpec arrival;

    std::size_t num_states() const { return s_max + 1; }
    std::size_t num_actions() const { return actions.size(); }
    void validate() const;
};

struct Transition {
    std::size_t state = 0;
    std::size_t action = 0;  // index into QueueEnvConfig::actions
    double loss = 0.0;
    double consumption = 0.0;
    std::size_t next_state = 0;
};

struct Trajectory {
    std::size_t episode = 0;
    std::uint64_t seed = 0;
    std::vector<Transition> steps;

    double total_loss() const;
    double total_consumption() const;
};

struct StepResult {
    double loss = 0.0;
    double consumption = 0.0;
    std::size_t next_state = 0;
};

/// Arrival-count sequence and the stationary distribution used for the model.
struct TraceData {
    std::vector<long> arrivals;
    std::vector<double> distribution;  // Pr(A = a), a = 0 .. A_max
    double raw_mean = 0.0;

    double mean() const;
};

/// Poisson(rate) truncated at a_max and renormalized.
std::vector<double> poisson_arrival_pmf(double rate, std::size_t a_max);

/// Scales raw per-bin counts to target_mean with error-diffusion rounding.
TraceData scale_trace(const std::vector<long>& counts, double target_mean, std::size_t a_max);

/// Reads a one-count-per-line CSV (optional header) and scales it.
TraceData ingest_trace(const std::string& path, double target_mean, std::size_t a_max);
std::vector<long> read_trace_counts(const std::string& path);
void write_trace_counts(const std::string& path, const std::vector<long>& counts);

/// Two-state on/off Markov-modulated Poisson process producing bursty bins.
struct BurstyTraceSpec {
    std::size_t bins = 100000;
    double rate_on = 3.0;
    double rate_off = 0.3;
    double p_on_to_off = 0.05;
    double p_off_to_on = 0.03;

    double stationary_mean() const;
};
std::vector<long> generate_bursty_trace(const BurstyTraceSpec& spec, std::uint64_t seed);

/// Queue loss mu + (1 - mu)(s / s_max)^2.
double queue_loss(const QueueEnvConfig& cfg, std::size_t state);
std::size_t queue_next_state(const QueueEnvConfig& cfg, std::size_t state, int served, long arrivals);

/// Ground-truth model for a given stationary arrival distribution.
TabularMdp build_true_mdp(const QueueEnvConfig& cfg, const std::vector<double>& arrival_pmf);
/// Ground-truth model; loads and scales the trace in trace mode.
TabularMdp build_true_mdp(const QueueEnvConfig& cfg);

std::size_t sample_index(const double* probs, std::size_t count, Rng& rng);

class QueueEnv {
public:
    explicit QueueEnv(QueueEnvConfig cfg);
    /// Trace-mode environment over already-scaled trace data.
    QueueEnv(QueueEnvConfig cfg, TraceData trace);

    const QueueEnvConfig& config() const { return cfg_; }
    const TabularMdp& true_mdp() const { return mdp_; }
    const std::vector<double>& arrival_pmf() const { return pmf_; }
    const TraceData* trace() const { return trace_.arrivals.empty() ? nullptr : &trace_; }
    std::size_t initial_state() const { return 0; }

    /// Positions the trace cursor at bin episode * T (wrapping); no-op for Poisson.
    void begin_episode(std::size_t episode);

    StepResult step(std::size_t state, std::size_t action, Rng& rng);
    StepResult step_with_arrivals(std::size_t state, std::size_t action, long arrivals) const;

    /// Runs one episode of `policy` from the empty queue.
    Trajectory rollout(const Policy& policy, std::size_t episode, Rng& rng);

private:
    QueueEnvConfig cfg_;
    TraceData trace_;
    std::vector<double> pmf_;
    TabularMdp mdp_;
    std::size_t cursor_ = 0;
};

}  // namespace bilevel
