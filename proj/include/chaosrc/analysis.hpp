#pragma once

// Metrics and spectra: windowed NMSE traces, DFT magnitude spectra, simple
// zero-phase band filtering, instantaneous frequency and SVG traces.

#include "chaosrc/series.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chaosrc {

/// One entry per disjoint window; nullopt where the target is constant.
using NmseTrace = std::vector<std::optional<double>>;

/// NMSE on consecutive disjoint windows; a trailing partial window is dropped.
NmseTrace windowed_nmse(std::span<const double> y, std::span<const double> target, std::size_t window);

/// True if `consecutive` successive defined entries fall below `threshold`.
bool locks(const NmseTrace& trace, double threshold, std::size_t consecutive = 3);

/// True if the last `consecutive` entries are all defined and below `threshold`.
bool holds_below(const NmseTrace& trace, double threshold, std::size_t consecutive = 3);

/// Full DFT magnitudes |X_k|, k = 0..M-1, rectangular window. frequency[k]
/// is signed (cycles per time unit): k/(M dt) for k <= M/2, (k-M)/(M dt) above.
struct Spectrum {
    std::vector<double> frequency;
    std::vector<double> magnitude;
};

Spectrum power_spectrum(const TimeSeries& ts);

/// Sum of |X_k|^2 over bins with f_lo <= |f| <= f_hi.
double band_energy(const Spectrum& s, double f_lo, double f_hi);
double total_energy(const Spectrum& s);

/// Writes the non-negative half as `freq,magnitude`, optionally in dB.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s, bool decibels = false);

/// Second-order section, direct form I.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    static Biquad butterworth_lowpass(double cutoff, double sample_rate);
    static Biquad butterworth_highpass(double cutoff, double sample_rate);
    std::vector<double> apply(std::span<const double> x) const;
};

/// Zero-phase band-pass: Butterworth high-pass at f_lo then low-pass at f_hi,
/// each run forward and backward.
TimeSeries bandpass_filter(const TimeSeries& ts, double f_lo, double f_hi);

/// Frequency estimates from successive upward zero crossings of the
/// mean-removed signal (crossing times linearly interpolated). Each entry is
/// placed at the midpoint between the crossings it spans; `span` crossings
/// are averaged per estimate.
struct FrequencyTrack {
    std::vector<double> time;
    std::vector<double> frequency;
};
FrequencyTrack zero_crossing_frequency(const TimeSeries& ts, std::size_t span = 1);

double pearson_correlation(std::span<const double> a, std::span<const double> b);
double mean_power(std::span<const double> x);

/// Simple polyline plot of one or more traces sharing an x axis.
struct PlotTrace {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};
void write_svg_plot(const std::filesystem::path& path, const std::string& title, std::span<const PlotTrace> traces,
                    bool log_y = false);

}  // namespace chaosrc
