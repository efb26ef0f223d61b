#include "bilevel/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace bilevel {

void QueueEnvConfig::validate() const {
    if (s_max < 1) throw ConfigError("s_max must be at least 1");
    if (horizon < 1) throw ConfigError("horizon must be positive");
    if (actions.empty()) throw ConfigError("action list is empty");
    std::set<int> seen;
    for (int a : actions) {
        if (a < 0) throw ConfigError("actions must be nonnegative");
        if (!seen.insert(a).second) throw ConfigError("actions must be distinct");
    }
    if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in [0, 1]");
    if (!(consumption_scale > 0.0)) throw ConfigError("consumption_scale must be positive");
    for (int a : actions)
        if (static_cast<double>(a) / consumption_scale > 1.0)
            throw ConfigError("consumption a / consumption_scale exceeds 1 for action " +
                              std::to_string(a));
    if (arrival.truncation < 1) throw ConfigError("arrival truncation must be positive");
    if (arrival.kind == ArrivalKind::poisson && !(arrival.rate > 0.0))
        throw ConfigError("poisson rate must be positive");
    if (arrival.kind == ArrivalKind::trace) {
        if (arrival.trace_path.empty()) throw ConfigError("trace mode needs trace_path");
        if (!(arrival.target_mean > 0.0)) throw ConfigError("trace target_mean must be positive");
    }
}

double Trajectory::total_loss() const {
    double total = 0.0;
    for (const auto& step : steps) total += step.loss;
    return total;
}

double Trajectory::total_consumption() const {
    double total = 0.0;
    for (const auto& step : steps) total += step.consumption;
    return total;
}

double TraceData::mean() const {
    if (arrivals.empty()) return 0.0;
    const double total = std::accumulate(arrivals.begin(), arrivals.end(), 0.0);
    return total / static_cast<double>(arrivals.size());
}

std::vector<double> poisson_arrival_pmf(double rate, std::size_t a_max) {
    if (!(rate > 0.0)) throw ConfigError("poisson rate must be positive");
    std::vector<double> pmf(a_max + 1);
    double term = std::exp(-rate);
    double total = 0.0;
    for (std::size_t a = 0; a <= a_max; ++a) {
        pmf[a] = term;
        total += term;
        term *= rate / static_cast<double>(a + 1);
    }
    if (total < 1.0 - 1e-6)
        throw ConfigError("poisson truncation keeps only " + std::to_string(total) +
                          " of the mass; raise the truncation");
    for (double& p : pmf) p /= total;
    return pmf;
}

TraceData scale_trace(const std::vector<long>& counts, double target_mean, std::size_t a_max) {
    if (counts.empty()) throw TraceError("trace is empty");
    if (!(target_mean > 0.0)) throw TraceError("target mean must be positive");
    double total = 0.0;
    for (long c : counts) {
        if (c < 0) throw TraceError("trace has a negative count");
        total += static_cast<double>(c);
    }
    TraceData data;
    data.raw_mean = total / static_cast<double>(counts.size());
    if (data.raw_mean == 0.0) throw TraceError("trace has zero mean; cannot rescale");

    const double scale = target_mean / data.raw_mean;
    data.arrivals.reserve(counts.size());
    double carry = 0.0;
    for (long c : counts) {
        const double want = static_cast<double>(c) * scale + carry;
        const long out = std::max(0L, std::lround(want));
        carry = want - static_cast<double>(out);
        data.arrivals.push_back(out);
    }
    data.distribution.assign(a_max + 1, 0.0);
    for (long a : data.arrivals)
        data.distribution[std::min<std::size_t>(static_cast<std::size_t>(a), a_max)] += 1.0;
    for (double& p : data.distribution) p /= static_cast<double>(data.arrivals.size());
    return data;
}

std::vector<long> read_trace_counts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open trace file " + path);
    std::vector<long> counts;
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // strip CR and whitespace
        line.erase(std::remove_if(line.begin(), line.end(),
                                  [](unsigned char ch) { return std::isspace(ch); }),
                   line.end());
        if (line.empty()) continue;
        const std::string field = line.substr(0, line.find(','));
        char* end = nullptr;
        const long value = std::strtol(field.c_str(), &end, 10);
        const bool numeric = end != field.c_str() && *end == '\0';
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw TraceError(path + ":" + std::to_string(line_no) + ": not an integer count");
        }
        first = false;
        if (value < 0) throw TraceError(path + ":" + std::to_string(line_no) + ": negative count");
        counts.push_back(value);
    }
    if (counts.empty()) throw TraceError("trace file " + path + " has no counts");
    return counts;
}

void write_trace_counts(const std::string& path, const std::vector<long>& counts) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    std::ofstream out(path);
    if (!out) throw TraceError("cannot write trace file " + path);
    out << "count\n";
    for (long c : counts) out << c << '\n';
}

TraceData ingest_trace(const std::string& path, double target_mean, std::size_t a_max) {
    return scale_trace(read_trace_counts(path), target_mean, a_max);
}

double BurstyTraceSpec::stationary_mean() const {
    const double on = p_off_to_on / (p_on_to_off + p_off_to_on);
    return on * rate_on + (1.0 - on) * rate_off;
}

std::vector<long> generate_bursty_trace(const BurstyTraceSpec& spec, std::uint64_t seed) {
    if (spec.bins == 0) throw ConfigError("bursty trace needs at least one bin");
    if (!(spec.rate_on >= 0.0 && spec.rate_off >= 0.0) || !(spec.rate_on + spec.rate_off > 0.0))
        throw ConfigError("bursty trace rates must be nonnegative and not both zero");
    if (!(spec.p_on_to_off > 0.0 && spec.p_on_to_off <= 1.0 && spec.p_off_to_on > 0.0 &&
          spec.p_off_to_on <= 1.0))
        throw ConfigError("bursty trace switching probabilities must lie in (0, 1]");
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<long> on(spec.rate_on > 0.0 ? spec.rate_on : 1.0);
    std::poisson_distribution<long> off(spec.rate_off > 0.0 ? spec.rate_off : 1.0);
    const double on_fraction = spec.p_off_to_on / (spec.p_on_to_off + spec.p_off_to_on);
    bool is_on = unit(rng) < on_fraction;
    std::vector<long> counts(spec.bins);
    for (auto& c : counts) {
        if (is_on)
            c = spec.rate_on > 0.0 ? on(rng) : 0;
        else
            c = spec.rate_off > 0.0 ? off(rng) : 0;
        const double u = unit(rng);
        is_on = is_on ? (u >= spec.p_on_to_off) : (u < spec.p_off_to_on);
    }
    return counts;
}

double queue_loss(const QueueEnvConfig& cfg, std::size_t state) {
    const double ratio = static_cast<double>(state) / static_cast<double>(cfg.s_max);
    return cfg.mu + (1.0 - cfg.mu) * ratio * ratio;
}

std::size_t queue_next_state(const QueueEnvConfig& cfg, std::size_t state, int served,
                             long arrivals) {
    const long backlog = static_cast<long>(state) - served + arrivals;
    return static_cast<std::size_t>(std::clamp<long>(backlog, 0, static_cast<long>(cfg.s_max)));
}

TabularMdp build_true_mdp(const QueueEnvConfig& cfg, const std::vector<double>& arrival_pmf) {
    cfg.validate();
    const std::size_t S = cfg.num_states();
    const std::size_t A = cfg.num_actions();
    std::vector<double> kernel(S * A * S, 0.0), loss(S * A), cons(S * A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            loss[s * A + a] = queue_loss(cfg, s);
            cons[s * A + a] = static_cast<double>(cfg.actions[a]) / cfg.consumption_scale;
            for (std::size_t n = 0; n < arrival_pmf.size(); ++n) {
                const std::size_t next = queue_next_state(cfg, s, cfg.actions[a], static_cast<long>(n));
                kernel[(s * A + a) * S + next] += arrival_pmf[n];
            }
        }
    }
    std::vector<double> initial(S, 0.0);
    initial[0] = 1.0;
    return TabularMdp::stationary(cfg.horizon, S, A, kernel, loss, cons, std::move(initial));
}

TabularMdp build_true_mdp(const QueueEnvConfig& cfg) {
    cfg.validate();
    if (cfg.arrival.kind == ArrivalKind::poisson)
        return build_true_mdp(cfg, poisson_arrival_pmf(cfg.arrival.rate, cfg.arrival.truncation));
    const TraceData trace =
        ingest_trace(cfg.arrival.trace_path, cfg.arrival.target_mean, cfg.arrival.truncation);
    return build_true_mdp(cfg, trace.distribution);
}

std::size_t sample_index(const double* probs, std::size_t count, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    return last_positive;
}

namespace {

std::vector<double> pmf_for(const QueueEnvConfig& cfg, const TraceData& trace) {
    cfg.validate();
    if (cfg.arrival.kind == ArrivalKind::poisson)
        return poisson_arrival_pmf(cfg.arrival.rate, cfg.arrival.truncation);
    return trace.distribution;
}

TraceData load_trace(const QueueEnvConfig& cfg) {
    if (cfg.arrival.kind != ArrivalKind::trace) return {};
    return ingest_trace(cfg.arrival.trace_path, cfg.arrival.target_mean, cfg.arrival.truncation);
}

}  // namespace

QueueEnv::QueueEnv(QueueEnvConfig cfg) : QueueEnv(cfg, load_trace(cfg)) {}

QueueEnv::QueueEnv(QueueEnvConfig cfg, TraceData trace)
    : cfg_(std::move(cfg)),
      trace_(std::move(trace)),
      pmf_(pmf_for(cfg_, trace_)),
      mdp_(build_true_mdp(cfg_, pmf_)) {
    if (cfg_.arrival.kind == ArrivalKind::trace && trace_.arrivals.empty())
        throw ConfigError("trace mode needs a non-empty trace");
}

void QueueEnv::begin_episode(std::size_t episode) {
    if (trace_.arrivals.empty()) return;
    cursor_ = (episode * cfg_.horizon) % trace_.arrivals.size();
}

StepResult QueueEnv::step_with_arrivals(std::size_t state, std::size_t action, long arrivals) const {
    if (state > cfg_.s_max) throw std::out_of_range("queue state out of range");
    if (action >= cfg_.actions.size()) throw std::out_of_range("action index out of range");
    StepResult result;
    result.loss = queue_loss(cfg_, state);
    result.consumption = static_cast<double>(cfg_.actions[action]) / cfg_.consumption_scale;
    result.next_state = queue_next_state(cfg_, state, cfg_.actions[action], arrivals);
    return result;
}

StepResult QueueEnv::step(std::size_t state, std::size_t action, Rng& rng) {
    long arrivals = 0;
    if (trace_.arrivals.empty()) {
        arrivals = static_cast<long>(sample_index(pmf_.data(), pmf_.size(), rng));
    } else {
        // the model lumps the tail into A_max, so the simulator does too
        arrivals = std::min<long>(trace_.arrivals[cursor_], static_cast<long>(cfg_.arrival.truncation));
        cursor_ = (cursor_ + 1) % trace_.arrivals.size();
    }
    return step_with_arrivals(state, action, arrivals);
}

Trajectory QueueEnv::rollout(const Policy& policy, std::size_t episode, Rng& rng) {
    require_same_shape(mdp_, policy);
    begin_episode(episode);
    Trajectory traj;
    traj.episode = episode;
    traj.steps.reserve(cfg_.horizon);
    std::size_t state = initial_state();
    const std::size_t A = cfg_.num_actions();
    for (std::size_t t = 0; t < cfg_.horizon; ++t) {
        const double* row = policy.table().data() + (t * mdp_.num_states() + state) * A;
        const std::size_t action = sample_index(row, A, rng);
        const StepResult out = step(state, action, rng);
        traj.steps.push_back({state, action, out.loss, out.consumption, out.next_state});
        state = out.next_state;
    }
    return traj;
}

}  // namespace bilevel
