#include "bilevel/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace bilevel {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(key + ": expected a nonnegative integer, got '" + value + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string format_number(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

AlgorithmSpec AlgorithmSpec::parse(const std::string& text) {
    if (text == "blol") return {Algorithm::blol, 0.0};
    if (text == "decoupled") return {Algorithm::decoupled, 0.0};
    const std::string prefix = "fixed:";
    if (text.rfind(prefix, 0) == 0) return {Algorithm::fixed_budget, to_double("algorithm", text.substr(prefix.size()))};
    throw ConfigError("unknown algorithm '" + text + "' (blol, decoupled, fixed:<b>)");
}

std::string AlgorithmSpec::label() const {
    switch (kind) {
        case Algorithm::blol: return "blol";
        case Algorithm::decoupled: return "decoupled";
        case Algorithm::fixed_budget: return "fixed_b" + format_number(budget);
    }
    return "unknown";
}

std::string AlgorithmSpec::text() const {
    if (kind == Algorithm::fixed_budget) return "fixed:" + format_number(budget);
    return label();
}

void RunConfig::validate() const {
    env.validate();
    if (!(episodes > warmup)) throw ConfigError("episodes must exceed warmup");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(oracle_step > 0.0)) throw ConfigError("oracle_step must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be nonnegative");
    if (!(m0 >= 0.0 && m1 >= 0.0 && m2 >= 0.0)) throw ConfigError("cost coefficients must be nonnegative");
    if (!(m0 + m2 > 0.0)) throw ConfigError("m0 + m2 must be positive (strong convexity)");
    if (!(lower_budget > 0.0 && lower_budget < upper_budget()))
        throw ConfigError("lower_budget must lie in (0, horizon)");
    if (!(gradient_clip > 0.0)) throw ConfigError("gradient_clip must be positive");
    if (!(radius_scale >= 0.0)) throw ConfigError("radius_scale must be nonnegative");
    if (!(resolve_threshold >= 0.0)) throw ConfigError("resolve_threshold must be nonnegative");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (algorithm.kind == Algorithm::fixed_budget &&
        !(algorithm.budget >= lower_budget && algorithm.budget <= upper_budget()))
        throw ConfigError("fixed budget must lie in [lower_budget, horizon]");
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& env = cfg.env;
    if (key == "s_max") env.s_max = to_unsigned(key, value);
    else if (key == "horizon") env.horizon = to_unsigned(key, value);
    else if (key == "mu") env.mu = to_double(key, value);
    else if (key == "consumption_scale") env.consumption_scale = to_double(key, value);
    else if (key == "actions") {
        env.actions.clear();
        for (const auto& item : split_list(value)) env.actions.push_back(static_cast<int>(to_double(key, item)));
    } else if (key == "arrival") {
        if (value == "poisson") env.arrival.kind = ArrivalKind::poisson;
        else if (value == "trace") env.arrival.kind = ArrivalKind::trace;
        else throw ConfigError("arrival must be poisson or trace");
    } else if (key == "arrival_rate") env.arrival.rate = to_double(key, value);
    else if (key == "trace_path") env.arrival.trace_path = value;
    else if (key == "trace_mean") env.arrival.target_mean = to_double(key, value);
    else if (key == "max_arrivals") env.arrival.truncation = to_unsigned(key, value);
    else if (key == "algorithm") cfg.algorithm = AlgorithmSpec::parse(value);
    else if (key == "episodes") cfg.episodes = to_unsigned(key, value);
    else if (key == "warmup") cfg.warmup = to_unsigned(key, value);
    else if (key == "delta") cfg.delta = to_double(key, value);
    else if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "beta") cfg.beta = to_double(key, value);
    else if (key == "lower_budget") cfg.lower_budget = to_double(key, value);
    else if (key == "m0") cfg.m0 = to_double(key, value);
    else if (key == "m1") cfg.m1 = to_double(key, value);
    else if (key == "m2") cfg.m2 = to_double(key, value);
    else if (key == "rho0") cfg.rho0 = to_double(key, value);
    else if (key == "gradient_clip") cfg.gradient_clip = to_double(key, value);
    else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& item : split_list(value)) cfg.seeds.push_back(to_unsigned(key, item));
    } else if (key == "output") cfg.output = value;
    else if (key == "lazy_resolve") cfg.lazy_resolve = to_bool(key, value);
    else if (key == "resolve_threshold") cfg.resolve_threshold = to_double(key, value);
    else if (key == "oracle_step") cfg.oracle_step = to_double(key, value);
    else if (key == "known_model") cfg.known_model = to_bool(key, value);
    else if (key == "radius_scale") cfg.radius_scale = to_double(key, value);
    else if (key == "record_timing") cfg.record_timing = to_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
        try {
            apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    const auto& env = cfg.env;
    out << "s_max = " << env.s_max << "\nhorizon = " << env.horizon << "\nmu = " << format_number(env.mu)
        << "\nconsumption_scale = " << format_number(env.consumption_scale) << "\nactions = ";
    for (std::size_t i = 0; i < env.actions.size(); ++i) out << (i ? "," : "") << env.actions[i];
    out << "\narrival = " << (env.arrival.kind == ArrivalKind::poisson ? "poisson" : "trace")
        << "\narrival_rate = " << format_number(env.arrival.rate);
    if (!env.arrival.trace_path.empty()) out << "\ntrace_path = " << env.arrival.trace_path;
    out << "\ntrace_mean = " << format_number(env.arrival.target_mean)
        << "\nmax_arrivals = " << env.arrival.truncation << "\nalgorithm = " << cfg.algorithm.text()
        << "\nepisodes = " << cfg.episodes << "\nwarmup = " << cfg.warmup
        << "\ndelta = " << format_number(cfg.delta) << "\nalpha = " << format_number(cfg.alpha)
        << "\nbeta = " << format_number(cfg.beta) << "\nlower_budget = " << format_number(cfg.lower_budget)
        << "\nm0 = " << format_number(cfg.m0) << "\nm1 = " << format_number(cfg.m1)
        << "\nm2 = " << format_number(cfg.m2) << "\nrho0 = " << format_number(cfg.rho0)
        << "\ngradient_clip = " << format_number(cfg.gradient_clip) << "\nseeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << "\noutput = " << cfg.output << "\nlazy_resolve = " << (cfg.lazy_resolve ? "true" : "false")
        << "\nresolve_threshold = " << format_number(cfg.resolve_threshold)
        << "\noracle_step = " << format_number(cfg.oracle_step)
        << "\nknown_model = " << (cfg.known_model ? "true" : "false")
        << "\nradius_scale = " << format_number(cfg.radius_scale)
        << "\nrecord_timing = " << (cfg.record_timing ? "true" : "false") << '\n';
}

}  // namespace bilevel
