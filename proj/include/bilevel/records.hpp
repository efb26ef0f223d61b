#pragma once

// Per-episode telemetry and its CSV form.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bilevel {

inline constexpr const char* kRecordHeader =
    "k,b,lambda,exp_loss,exp_cons,real_loss,real_cons,f_k,switch_cost,episode_cost,cum_gap,cum_viol,lp_status,solve_ms";

struct EpisodeRecord {
    std::size_t k = 0;
    double budget = 0.0;
    std::optional<double> lambda;  // absent for learners without dual feedback
    double expected_loss = 0.0;
    double expected_consumption = 0.0;
    double realized_loss = 0.0;
    double realized_consumption = 0.0;
    double provisioning_cost = 0.0;
    double switching_cost = 0.0;
    double episode_cost = 0.0;
    double cum_gap = 0.0;
    double cum_viol = 0.0;
    std::string lp_status;
    double solve_ms = 0.0;

    bool operator==(const EpisodeRecord&) const = default;
};

class RecordFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip formatting, so a parse of the output is field-identical.
void write_records(std::ostream& out, const std::vector<EpisodeRecord>& records);
void write_records(const std::string& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_records(std::istream& in);
std::vector<EpisodeRecord> read_records(const std::string& path);

}  // namespace bilevel
