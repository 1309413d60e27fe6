#include "chaosrc/signals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace chaosrc {

void FMMessageParams::validate() const {
    if (!(amplitude > 0.0)) throw std::invalid_argument("FM message amplitude must be positive");
    if (!(carrier > 0.0 && modulation > 0.0)) throw std::invalid_argument("FM message frequencies must be positive");
}

double FMMessageParams::instantaneous_frequency(double t) const {
    return carrier + index * modulation * std::sin(2.0 * std::numbers::pi * modulation * t);
}

TimeSeries fm_message(const FMMessageParams& p, double dt, std::size_t steps, double t0) {
    p.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("fm_message: dt must be positive");
    TimeSeries m{dt, t0, std::vector<double>(steps)};
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = m.time_at(i);
        m.values[i] = p.amplitude * std::sin(two_pi * p.carrier * t - p.index * std::cos(two_pi * p.modulation * t));
    }
    return m;
}

void BitMessageParams::validate() const {
    if (!(amplitude > 0.0)) throw std::invalid_argument("bit message amplitude must be positive");
    if (!(omega0 > 0.0 && omega1 > omega0)) throw std::invalid_argument("bit message needs omega1 > omega0 > 0");
    if (slot_durations && !((*slot_durations)[0] > 0.0 && (*slot_durations)[1] > 0.0)) {
        throw std::invalid_argument("bit slot durations must be positive");
    }
}

double BitMessageParams::slot_duration(int bit) const {
    if (slot_durations) return (*slot_durations)[bit ? 1 : 0];
    return 2.0 * std::numbers::pi / omega0;
}

std::vector<double> slot_edges(const Bits& bits, const BitMessageParams& p, double t0) {
    std::vector<double> edges{t0};
    edges.reserve(bits.size() + 1);
    if (!p.slot_durations) {
        const double T = p.slot_duration(0);
        for (std::size_t k = 1; k <= bits.size(); ++k) edges.push_back(t0 + static_cast<double>(k) * T);
    } else {
        for (int b : bits) edges.push_back(edges.back() + p.slot_duration(b));
    }
    return edges;
}

TimeSeries bit_message(const Bits& bits, const BitMessageParams& p, double dt, double t0) {
    p.validate();
    if (bits.empty()) throw std::invalid_argument("bit_message: no bits");
    if (!(dt > 0.0)) throw std::invalid_argument("bit_message: dt must be positive");
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("bit_message: bits must be 0 or 1");
    }
    const auto edges = slot_edges(bits, p, t0);
    const auto count = static_cast<std::size_t>(std::llround((edges.back() - t0) / dt));
    TimeSeries m{dt, t0, std::vector<double>(count)};
    std::size_t slot = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = m.time_at(i);
        while (slot + 1 < bits.size() && t >= edges[slot + 1] - 1e-9 * dt) ++slot;
        const double omega = bits[slot] ? p.omega1 : p.omega0;
        m.values[i] = p.amplitude * std::sin(omega * t);
    }
    return m;
}

namespace {

// |sum x_i exp(-j omega t_i)|^2 over the given sample range.
double projection_energy(const TimeSeries& ts, std::size_t first, std::size_t last, double omega) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = first; i < last; ++i) acc += ts.values[i] * std::polar(1.0, -omega * ts.time_at(i));
    return std::norm(acc);
}

}  // namespace

DecodedBits decode_bits(const TimeSeries& m_rec, const BitMessageParams& p, std::size_t n_bits,
                        std::optional<double> start) {
    p.validate();
    if (p.slot_durations && (*p.slot_durations)[0] != (*p.slot_durations)[1]) {
        throw std::invalid_argument("decode_bits: needs equal slot durations");
    }
    const double T = p.slot_duration(0);
    if (T < 2.0 * std::numbers::pi / p.omega0 * (1.0 - 1e-12)) {
        throw std::invalid_argument("decode_bits: slot shorter than one omega0 period");
    }
    const double t_start = start.value_or(m_rec.t0);
    const double t_last = t_start + static_cast<double>(n_bits) * T;
    if (t_start < m_rec.t0 - 1e-9 * m_rec.dt || t_last > m_rec.end_time() + m_rec.dt * (1.0 + 1e-9)) {
        throw std::invalid_argument("decode_bits: signal does not cover the requested slots");
    }

    auto index_at = [&m_rec](double t) {
        const double pos = (t - m_rec.t0) / m_rec.dt;
        const auto k = static_cast<long long>(std::ceil(pos - 1e-9));
        return static_cast<std::size_t>(std::clamp<long long>(k, 0, static_cast<long long>(m_rec.size())));
    };

    DecodedBits out;
    for (std::size_t k = 0; k < n_bits; ++k) {
        const std::size_t first = index_at(t_start + static_cast<double>(k) * T);
        const std::size_t last = index_at(t_start + static_cast<double>(k + 1) * T);
        const double e0 = projection_energy(m_rec, first, last, p.omega0);
        const double e1 = projection_energy(m_rec, first, last, p.omega1);
        out.bits.push_back(e1 > e0 ? 1 : 0);
        const double lo = std::min(e0, e1);
        out.confidence.push_back(lo > 0.0 ? std::max(e0, e1) / lo : INFINITY);
    }
    return out;
}

double bit_error_rate(const Bits& a, const Bits& b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("bit_error_rate: length mismatch");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) errors += (a[i] != b[i]) ? 1 : 0;
    return static_cast<double>(errors) / static_cast<double>(a.size());
}

Bits random_bits(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Bits bits(n);
    for (auto& b : bits) b = rng.unit() < 0.5 ? 0 : 1;
    return bits;
}

}  // namespace chaosrc
