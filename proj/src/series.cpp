#include "chaosrc/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chaosrc {

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > values.size()) {
        throw std::out_of_range("TimeSeries::slice: range [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") exceeds length " +
                                std::to_string(values.size()));
    }
    TimeSeries out{dt, time_at(first), {}};
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                      values.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

void TimeSeries::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeSeries: dt must be positive");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw std::invalid_argument("TimeSeries: non-finite value at index " + std::to_string(i));
        }
    }
}

TimeSeries Vec3Series::component(std::size_t c) const {
    if (c > 2) throw std::out_of_range("Vec3Series::component: index must be 0, 1 or 2");
    TimeSeries out{dt, t0, {}};
    out.values.reserve(values.size());
    for (const auto& v : values) out.values.push_back(v[c]);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("cannot parse number '" + std::string(text) + "'");
    }
    return v;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const TimeSeries& ts) {
    auto out = open_for_write(path);
    out << "t,value\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << format_double(ts.time_at(i)) << ',' << format_double(ts.values[i]) << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Vec3Series& ts) {
    auto out = open_for_write(path);
    out << "t,x,y,z\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& v = ts.values[i];
        out << format_double(ts.time_at(i)) << ',' << format_double(v[0]) << ','
            << format_double(v[1]) << ',' << format_double(v[2]) << '\n';
    }
}

TimeSeries read_time_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,", 0) != 0) {
        throw std::runtime_error(path.string() + ": expected header starting with 't,'");
    }
    std::vector<double> times;
    TimeSeries ts;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": missing value column");
        }
        const auto rest = std::string_view(line).substr(comma + 1);
        const auto value_end = rest.find(',');
        try {
            times.push_back(parse_double(std::string_view(line).substr(0, comma)));
            ts.values.push_back(parse_double(rest.substr(0, value_end)));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (times.size() < 2) {
        if (times.empty()) throw std::runtime_error(path.string() + ": no samples");
        ts.t0 = times[0];
        return ts;
    }
    ts.t0 = times.front();
    ts.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs((times[i] - times[i - 1]) - ts.dt) > 1e-9 * std::max(1.0, std::abs(ts.dt))) {
            throw std::runtime_error(path.string() + ": non-uniform sampling at row " + std::to_string(i + 1));
        }
    }
    return ts;
}

void write_table_csv(const std::filesystem::path& path, std::span<const std::string> header,
                     std::span<const std::vector<double>> columns) {
    if (header.size() != columns.size()) throw std::invalid_argument("write_table_csv: header/column mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw std::invalid_argument("write_table_csv: ragged columns");
    }
    auto out = open_for_write(path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const double v = columns[j][i];
            out << (j ? "," : "") << (std::isnan(v) ? std::string("nan") : format_double(v));
        }
        out << '\n';
    }
}

}  // namespace chaosrc
