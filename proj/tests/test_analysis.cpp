#include "chaosrc/analysis.hpp"
#include "chaosrc/reservoir.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace chaosrc;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.symmetric(1.0);
    return v;
}

TimeSeries sine(double f, double dt, std::size_t n) {
    TimeSeries ts{dt, 0.0, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) ts.values[i] = std::sin(2 * std::numbers::pi * f * ts.time_at(i));
    return ts;
}

}  // namespace

TEST_CASE("windowed NMSE") {
    const auto t = noise(1000, 1);
    const auto zeros = windowed_nmse(t, t, 100);
    REQUIRE(zeros.size() == 10);
    for (const auto& v : zeros) CHECK(*v == 0.0);

    const auto y = noise(1000, 2);
    const auto whole = windowed_nmse(y, t, 1000);
    REQUIRE(whole.size() == 1);
    CHECK(*whole[0] == *nmse(y, t));

    CHECK(windowed_nmse(std::span(y).first(950), std::span(t).first(950), 100).size() == 9);

    std::vector<double> stepped = t;
    const double c = 0.3;
    for (std::size_t i = 500; i < 1000; ++i) stepped[i] += c;
    const auto trace = windowed_nmse(stepped, t, 100);
    const std::span<const double> ts(t);
    for (std::size_t w = 0; w < 5; ++w) CHECK(*trace[w] == 0.0);
    for (std::size_t w = 5; w < 10; ++w) {
        const auto win = ts.subspan(w * 100, 100);
        double mean = 0.0, var = 0.0;
        for (double v : win) mean += v;
        mean /= 100.0;
        for (double v : win) var += (v - mean) * (v - mean);
        var /= 100.0;
        CHECK(*trace[w] == doctest::Approx(c * c / var).epsilon(1e-12));
    }

    CHECK_THROWS_AS(windowed_nmse(std::span(y).first(50), std::span(t).first(50), 100), std::invalid_argument);
    CHECK_THROWS_AS(windowed_nmse(y, std::span(t).first(999), 100), std::invalid_argument);
    const std::vector<double> flat(200, 1.0);
    CHECK_FALSE(windowed_nmse(flat, flat, 100)[0].has_value());
}

TEST_CASE("lock detection") {
    const NmseTrace trace{0.5, 0.05, 0.05, std::nullopt, 0.05, 0.05, 0.05, 0.5};
    CHECK(locks(trace, 0.1));
    CHECK_FALSE(locks(trace, 0.1, 4));
    CHECK_FALSE(holds_below(trace, 0.1));
    const NmseTrace tail{0.5, 0.5, 0.05, 0.05, 0.05};
    CHECK(holds_below(tail, 0.1));
    CHECK_FALSE(holds_below(tail, 0.1, 4));
    CHECK_FALSE(holds_below(NmseTrace{0.01}, 0.1));
}

TEST_CASE("spectrum matches a naive DFT") {
    const std::size_t m = 256;
    TimeSeries ts{0.5, 0.0, noise(m, 3)};
    const auto s = power_spectrum(ts);
    REQUIRE(s.magnitude.size() == m);
    for (std::size_t k = 0; k < m; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t n = 0; n < m; ++n)
            acc += ts.values[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(n) / double(m));
        REQUIRE(std::abs(s.magnitude[k] - std::abs(acc)) <= 1e-9);
    }
    CHECK(s.frequency[1] == doctest::Approx(1.0 / (256 * 0.5)));
    CHECK(s.frequency[128] == doctest::Approx(0.5 / 0.5 / 1.0));
    CHECK(s.frequency[255] == doctest::Approx(-1.0 / 128.0));
}

TEST_CASE("Parseval") {
    for (std::size_t m : {255u, 1000u, 4096u}) {
        TimeSeries ts{1.0, 0.0, noise(m, m)};
        double time_energy = 0.0;
        for (double v : ts.values) time_energy += v * v;
        const double freq_energy = total_energy(power_spectrum(ts)) / static_cast<double>(m);
        CHECK(std::abs(freq_energy - time_energy) <= 1e-9 * time_energy);
    }
}

TEST_CASE("a pure tone occupies one bin") {
    const double f = 0.05;
    const auto ts = sine(f, 0.5, 2000);  // 50 whole periods
    const auto s = power_spectrum(ts);
    CHECK(band_energy(s, f - 1e-6, f + 1e-6) / total_energy(s) >= 0.99);
    CHECK_THROWS_AS(power_spectrum(TimeSeries{1.0, 0.0, {1.0}}), std::invalid_argument);
}

TEST_CASE("band-pass filter keeps the pass band") {
    TimeSeries mix = sine(0.01, 0.5, 20000);
    const auto hi = sine(0.3, 0.5, 20000);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values[i] += hi.values[i];
    const auto out = bandpass_filter(mix, 0.0025, 0.04);
    const auto ref = sine(0.01, 0.5, 20000);
    const std::span<const double> o(out.values), r(ref.values);
    CHECK(*nmse(o.subspan(2000, 16000), r.subspan(2000, 16000)) < 1e-3);
    CHECK_THROWS_AS(bandpass_filter(mix, 0.04, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(bandpass_filter(mix, 0.01, 1.5), std::invalid_argument);
}

TEST_CASE("zero-crossing frequency of a tone") {
    const auto ts = sine(0.02, 0.5, 10000);
    const auto track = zero_crossing_frequency(ts, 3);
    REQUIRE(track.frequency.size() > 50);
    for (double f : track.frequency) REQUIRE(f == doctest::Approx(0.02).epsilon(1e-4));
    CHECK_THROWS_AS(zero_crossing_frequency(ts, 0), std::invalid_argument);
}

TEST_CASE("correlation and power") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> b{2.0, 4.0, 6.0, 8.0};
    const std::vector<double> c{4.0, 3.0, 2.0, 1.0};
    CHECK(pearson_correlation(a, b) == doctest::Approx(1.0));
    CHECK(pearson_correlation(a, c) == doctest::Approx(-1.0));
    CHECK(pearson_correlation(a, std::vector<double>(4, 1.0)) == 0.0);
    CHECK(mean_power(a) == doctest::Approx(7.5));
    CHECK(mean_power(std::vector<double>{}) == 0.0);
}
