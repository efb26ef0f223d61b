#pragma once

// Experiment configuration and its key = value text format.

#include "bilevel/env.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bilevel {

enum class Algorithm { blol, fixed_budget, decoupled };

struct AlgorithmSpec {
    Algorithm kind = Algorithm::blol;
    double budget = 0.0;  // fixed_budget only

    /// "blol", "decoupled", "fixed:<b>".
    static AlgorithmSpec parse(const std::string& text);
    std::string label() const;  // file-name safe: blol, decoupled, fixed_b4, fixed_b4.5
    std::string text() const;
};

struct RunConfig {
    QueueEnvConfig env;
    AlgorithmSpec algorithm;
    std::size_t episodes = 5000;
    std::size_t warmup = 500;
    double delta = 0.05;
    double alpha = 0.5;        // switching weight
    double beta = 1.0;         // scheduling weight
    double lower_budget = 2.0; // B_0
    double m0 = 0.25;
    double m1 = 0.01;
    double m2 = 0.05;
    double rho0 = 5.0;
    double gradient_clip = 50.0;
    std::vector<std::uint64_t> seeds{1};
    std::string output = "run.csv";
    bool lazy_resolve = false;
    double resolve_threshold = 0.05;
    double oracle_step = 0.05;
    bool known_model = false;
    double radius_scale = 1.0;
    bool record_timing = false;

    void validate() const;
    double upper_budget() const { return static_cast<double>(env.horizon); }
};

/// Applies one "key = value" assignment; unknown keys raise ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
/// Parses a whole file; '#' starts a comment, blank lines are ignored.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace bilevel
