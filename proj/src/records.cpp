#include "bilevel/records.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bilevel {

namespace {

void put(std::ostream& out, double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, end - buf);
}

double get_double(const std::string& field, std::size_t line) {
    double v = 0.0;
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), last, v);
    if (field.empty() || ec != std::errc() || ptr != last)
        throw RecordFormatError("line " + std::to_string(line) + ": bad number '" + field + "'");
    return v;
}

}  // namespace

void write_records(std::ostream& out, const std::vector<EpisodeRecord>& records) {
    out << kRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.k << ',';
        put(out, r.budget);
        out << ',';
        if (r.lambda) put(out, *r.lambda);
        for (double v : {r.expected_loss, r.expected_consumption, r.realized_loss, r.realized_consumption,
                         r.provisioning_cost, r.switching_cost, r.episode_cost, r.cum_gap, r.cum_viol}) {
            out << ',';
            put(out, v);
        }
        out << ',' << r.lp_status << ',';
        put(out, r.solve_ms);
        out << '\n';
    }
}

void write_records(const std::string& path, const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_records(out, records);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<EpisodeRecord> read_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecordHeader)
        throw RecordFormatError("record header does not match the expected schema");
    std::vector<EpisodeRecord> out;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 14)
            throw RecordFormatError("line " + std::to_string(number) + ": expected 14 fields, got " +
                                    std::to_string(fields.size()));
        EpisodeRecord r;
        const double k = get_double(fields[0], number);
        if (k < 1.0 || k != static_cast<double>(static_cast<std::size_t>(k)))
            throw RecordFormatError("line " + std::to_string(number) + ": bad episode index");
        r.k = static_cast<std::size_t>(k);
        r.budget = get_double(fields[1], number);
        if (!fields[2].empty()) r.lambda = get_double(fields[2], number);
        r.expected_loss = get_double(fields[3], number);
        r.expected_consumption = get_double(fields[4], number);
        r.realized_loss = get_double(fields[5], number);
        r.realized_consumption = get_double(fields[6], number);
        r.provisioning_cost = get_double(fields[7], number);
        r.switching_cost = get_double(fields[8], number);
        r.episode_cost = get_double(fields[9], number);
        r.cum_gap = get_double(fields[10], number);
        r.cum_viol = get_double(fields[11], number);
        r.lp_status = fields[12];
        r.solve_ms = get_double(fields[13], number);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<EpisodeRecord> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    return read_records(in);
}

}  // namespace bilevel
