#pragma once

// Plain-text messages for the cryptosystem: a frequency-modulated harmonic
// and a frequency-keyed bitstream, plus a two-tone bit decoder.

#include "chaosrc/series.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <vector>

namespace chaosrc {

struct FMMessageParams {
    double amplitude = 0.01;    // A
    double carrier = 5e-3;      // f_c
    double index = 3.0;         // B
    double modulation = 5e-5;   // f_m

    void validate() const;
    /// f_c + B f_m sin(2 pi f_m t), the derivative of the phase over 2 pi.
    double instantaneous_frequency(double t) const;
};

/// m(t) = A sin(2 pi f_c t - B cos(2 pi f_m t)), `steps` samples from t0.
TimeSeries fm_message(const FMMessageParams& p, double dt, std::size_t steps, double t0 = 0.0);

struct BitMessageParams {
    double amplitude = 0.02;
    double omega0 = 0.02 * std::numbers::pi;
    double omega1 = 0.04 * std::numbers::pi;
    /// Slot lengths for bit 0 and bit 1. Unset means both equal 2 pi / omega0.
    std::optional<std::array<double, 2>> slot_durations;

    void validate() const;
    double slot_duration(int bit) const;
};

using Bits = std::vector<int>;

/// m(t) = A sin(omega_b(k) t) with absolute time t, slots laid end to end
/// from t0. Covers the whole bitstream with samples at t0 + i*dt.
TimeSeries bit_message(const Bits& bits, const BitMessageParams& p, double dt, double t0 = 0.0);

/// Slot start times for a bitstream beginning at t0, plus the end time.
std::vector<double> slot_edges(const Bits& bits, const BitMessageParams& p, double t0 = 0.0);

struct DecodedBits {
    Bits bits;
    std::vector<double> confidence;  // larger energy over smaller, >= 1
};

/// Decodes n_bits equal slots starting at `start` (default: the first sample)
/// by comparing single-frequency projections at omega0 and omega1. Requires
/// uniform slot lengths of at least one omega0 period.
DecodedBits decode_bits(const TimeSeries& m_rec, const BitMessageParams& p, std::size_t n_bits,
                        std::optional<double> start = std::nullopt);

/// Fraction of differing positions; lengths must match.
double bit_error_rate(const Bits& a, const Bits& b);

Bits random_bits(std::size_t n, std::uint64_t seed);

}  // namespace chaosrc
