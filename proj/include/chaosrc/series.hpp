#pragma once

// Uniformly sampled signals, their CSV form, and the seeded uniform generator
// shared by every stochastic stage.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace chaosrc {

using Vec3 = std::array<double, 3>;

/// Scalar signal sampled at t0 + i*dt.
struct TimeSeries {
    double dt = 1.0;
    double t0 = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double end_time() const { return empty() ? t0 : time_at(values.size() - 1); }

    /// Samples [first, first + count) as a new series with a shifted origin.
    TimeSeries slice(std::size_t first, std::size_t count) const;

    /// Throws std::invalid_argument if dt <= 0 or a value is not finite.
    void validate() const;
};

/// Three-component trajectory (Lorenz state) sampled at t0 + i*dt.
struct Vec3Series {
    double dt = 1.0;
    double t0 = 0.0;
    std::vector<Vec3> values;

    std::size_t size() const { return values.size(); }
    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    TimeSeries component(std::size_t c) const;
};

// CSV with header `t,value` (or `t,x,y,z`). Doubles are written in shortest
// round-trip form so reading back reproduces every bit.
void write_csv(const std::filesystem::path& path, const TimeSeries& ts);
void write_csv(const std::filesystem::path& path, const Vec3Series& ts);
TimeSeries read_time_series_csv(const std::filesystem::path& path);

/// Multi-column table: header names plus equal-length columns.
void write_table_csv(const std::filesystem::path& path, std::span<const std::string> header,
                     std::span<const std::vector<double>> columns);

std::string format_double(double v);
double parse_double(std::string_view text);

/// Seeded 64-bit Mersenne twister with a fixed 53-bit mapping to [0,1), so
/// streams do not depend on the standard library's distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform on [-half_width, +half_width).
    double symmetric(double half_width) { return half_width * (2.0 * unit() - 1.0); }

private:
    std::mt19937_64 engine_;
};

}  // namespace chaosrc
