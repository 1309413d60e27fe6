#include "chaosrc/analysis.hpp"

#include "chaosrc/reservoir.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace chaosrc {

NmseTrace windowed_nmse(std::span<const double> y, std::span<const double> target, std::size_t window) {
    if (y.size() != target.size()) throw std::invalid_argument("windowed_nmse: length mismatch");
    if (window < 2) throw std::invalid_argument("windowed_nmse: window must be >= 2");
    if (y.size() < window) throw std::invalid_argument("windowed_nmse: series shorter than one window");
    NmseTrace out;
    for (std::size_t start = 0; start + window <= y.size(); start += window) {
        out.push_back(nmse(y.subspan(start, window), target.subspan(start, window)));
    }
    return out;
}

bool locks(const NmseTrace& trace, double threshold, std::size_t consecutive) {
    std::size_t run = 0;
    for (const auto& v : trace) {
        run = (v && *v < threshold) ? run + 1 : 0;
        if (run >= consecutive) return true;
    }
    return false;
}

bool holds_below(const NmseTrace& trace, double threshold, std::size_t consecutive) {
    if (consecutive == 0 || trace.size() < consecutive) return false;
    return std::all_of(trace.end() - static_cast<std::ptrdiff_t>(consecutive), trace.end(),
                       [threshold](const auto& v) { return v && *v < threshold; });
}

namespace {
std::mutex fftw_planner_mutex;
}

Spectrum power_spectrum(const TimeSeries& ts) {
    const std::size_t m = ts.size();
    if (m < 2) throw std::invalid_argument("power_spectrum: need at least two samples");
    std::vector<double> in(ts.values);
    std::vector<fftw_complex> out(m / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in.data(), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex);
        fftw_destroy_plan(plan);
    }

    Spectrum s;
    s.frequency.resize(m);
    s.magnitude.resize(m);
    const double df = 1.0 / (static_cast<double>(m) * ts.dt);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t h = k <= m / 2 ? k : m - k;  // conjugate symmetry
        s.magnitude[k] = std::hypot(out[h][0], out[h][1]);
        s.frequency[k] = (k <= m / 2) ? static_cast<double>(k) * df
                                      : (static_cast<double>(k) - static_cast<double>(m)) * df;
    }
    return s;
}

double band_energy(const Spectrum& s, double f_lo, double f_hi) {
    double e = 0.0;
    for (std::size_t k = 0; k < s.frequency.size(); ++k) {
        const double f = std::abs(s.frequency[k]);
        if (f >= f_lo && f <= f_hi) e += s.magnitude[k] * s.magnitude[k];
    }
    return e;
}

double total_energy(const Spectrum& s) {
    double e = 0.0;
    for (double v : s.magnitude) e += v * v;
    return e;
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s, bool decibels) {
    std::vector<double> f;
    std::vector<double> mag;
    for (std::size_t k = 0; k < s.frequency.size(); ++k) {
        if (s.frequency[k] < 0.0) continue;
        f.push_back(s.frequency[k]);
        mag.push_back(decibels ? 20.0 * std::log10(std::max(s.magnitude[k], 1e-300)) : s.magnitude[k]);
    }
    const std::string header[] = {"freq", "magnitude"};
    const std::vector<double> cols[] = {f, mag};
    write_table_csv(path, header, cols);
}

// Bilinear-transform Butterworth sections (Q = 1/sqrt 2).
Biquad Biquad::butterworth_lowpass(double cutoff, double sample_rate) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / sample_rate;
    const double alpha = std::sin(w0) / std::numbers::sqrt2;
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
}

Biquad Biquad::butterworth_highpass(double cutoff, double sample_rate) {
    const double w0 = 2.0 * std::numbers::pi * cutoff / sample_rate;
    const double alpha = std::sin(w0) / std::numbers::sqrt2;
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 + c) / 2.0 / a0, -(1.0 + c) / a0, (1.0 + c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
}

std::vector<double> Biquad::apply(std::span<const double> x) const {
    std::vector<double> y(x.size());
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x[i];
        y2 = y1;
        y1 = v;
        y[i] = v;
    }
    return y;
}

namespace {

std::vector<double> filtfilt(const Biquad& f, std::vector<double> x) {
    x = f.apply(x);
    std::reverse(x.begin(), x.end());
    x = f.apply(x);
    std::reverse(x.begin(), x.end());
    return x;
}

}  // namespace

TimeSeries bandpass_filter(const TimeSeries& ts, double f_lo, double f_hi) {
    const double fs = 1.0 / ts.dt;
    if (!(f_lo > 0.0 && f_hi > f_lo && f_hi < fs / 2.0)) {
        throw std::invalid_argument("bandpass_filter: need 0 < f_lo < f_hi < Nyquist");
    }
    TimeSeries out = ts;
    out.values = filtfilt(Biquad::butterworth_highpass(f_lo, fs), out.values);
    out.values = filtfilt(Biquad::butterworth_lowpass(f_hi, fs), out.values);
    return out;
}

FrequencyTrack zero_crossing_frequency(const TimeSeries& ts, std::size_t span) {
    if (span < 1) throw std::invalid_argument("zero_crossing_frequency: span must be >= 1");
    double mean = 0.0;
    for (double v : ts.values) mean += v;
    mean /= static_cast<double>(std::max<std::size_t>(ts.size(), 1));

    std::vector<double> crossings;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double a = ts.values[i - 1] - mean;
        const double b = ts.values[i] - mean;
        if (a < 0.0 && b >= 0.0) {
            const double frac = a / (a - b);
            crossings.push_back(ts.time_at(i - 1) + frac * ts.dt);
        }
    }
    FrequencyTrack track;
    for (std::size_t i = 0; i + span < crossings.size(); ++i) {
        const double t_a = crossings[i];
        const double t_b = crossings[i + span];
        track.time.push_back(0.5 * (t_a + t_b));
        track.frequency.push_back(static_cast<double>(span) / (t_b - t_a));
    }
    return track;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson_correlation: bad lengths");
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double mean_power(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double p = 0.0;
    for (double v : x) p += v * v;
    return p / static_cast<double>(x.size());
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title, std::span<const PlotTrace> traces,
                    bool log_y) {
    constexpr double width = 900, height = 400, margin = 50;
    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    auto ty = [log_y](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& tr : traces) {
        for (std::size_t i = 0; i < tr.x.size() && i < tr.y.size(); ++i) {
            if (!std::isfinite(tr.y[i]) || (log_y && tr.y[i] <= 0.0)) continue;
            xmin = std::min(xmin, tr.x[i]);
            xmax = std::max(xmax, tr.x[i]);
            ymin = std::min(ymin, ty(tr.y[i]));
            ymax = std::max(ymax, ty(tr.y[i]));
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
        << (log_y ? " (log10 y)" : "") << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin << "\" height=\""
        << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const auto& tr = traces[t];
        const char* color = colors[t % std::size(colors)];
        out << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << color << "\" points=\"";
        for (std::size_t i = 0; i < tr.x.size() && i < tr.y.size(); ++i) {
            if (!std::isfinite(tr.y[i]) || (log_y && tr.y[i] <= 0.0)) continue;
            const double px = margin + (tr.x[i] - xmin) / (xmax - xmin) * (width - 2 * margin);
            const double py = height - margin - (ty(tr.y[i]) - ymin) / (ymax - ymin) * (height - 2 * margin);
            out << px << ',' << py << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin - 150 << "\" y=\"" << margin + 15 * (t + 1)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << tr.label << "</text>\n";
    }
    out << "<text x=\"" << margin << "\" y=\"" << height - 15 << "\" font-size=\"11\">x: " << xmin << " .. " << xmax
        << "   y: " << ymin << " .. " << ymax << "</text>\n";
    out << "</svg>\n";
}

}  // namespace chaosrc
