#include "chaosrc/analysis.hpp"
#include "chaosrc/crypto.hpp"
#include "chaosrc/signals.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace chaosrc;

namespace {

struct Carrier {
    DelayHistory history;
    double t_start;
};

Carrier warm_carrier(const CipherParams& p) {
    MackeyGlassIntegrator mg(p.equivalent_mg(), DelayHistory::constant(0.5), p.dt);
    mg.advance(2000);
    return {mg.snapshot(), mg.time()};
}

std::span<const double> tail(const std::vector<double>& v, std::size_t skip_front, std::size_t skip_back) {
    return std::span<const double>(v).subspan(skip_front, v.size() - skip_front - skip_back);
}

}  // namespace

TEST_CASE("cipher parameters") {
    const CipherParams p;
    const auto q = p.equivalent_mg();
    CHECK(q.beta == doctest::Approx(0.2));
    CHECK(q.gamma == doctest::Approx(0.1));
    CHECK(p.f(1.0) == doctest::Approx(1.0));
    CHECK(p.f(0.0) == 0.0);
    CipherParams bad;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("zero message reduces to Mackey-Glass") {
    const CipherParams p;
    const auto hist = DelayHistory::constant(0.5);
    const auto x = alice_encrypt([](double) { return 0.0; }, p, hist, 3000);
    const auto plain = integrate_mg(MGParams{}, hist, 0.5, 3000);
    REQUIRE(x.size() == plain.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x.values[i] - plain.values[i]));
    CHECK(worst <= 1e-10);

    const TimeSeries zeros{0.5, 0.0, std::vector<double>(3001, 0.0)};
    CHECK(alice_encrypt(zeros, p, hist).values == x.values);
}

TEST_CASE("message is small against the carrier") {
    const CipherParams p;
    const auto c = warm_carrier(p);
    const auto m = fm_message(FMMessageParams{}, p.dt, 8000, c.t_start);
    const auto x = alice_encrypt(m, p, c.history);
    CHECK(x.size() == m.size());
    CHECK(x.t0 == m.t0);
    const double peak = *std::max_element(x.values.begin(), x.values.end());
    CHECK(peak / 0.01 > 50.0);
    CHECK(peak / 0.01 < 200.0);

    TimeSeries wrong_dt = m;
    wrong_dt.dt = 0.25;
    CHECK_THROWS_AS(alice_encrypt(wrong_dt, p, c.history), std::invalid_argument);
}

TEST_CASE("encryption mixes the message nonlinearly") {
    const CipherParams p;
    const auto c = warm_carrier(p);
    const auto m = fm_message(FMMessageParams{}, p.dt, 6000, c.t_start);
    TimeSeries m2 = m;
    for (double& v : m2.values) v *= 2.0;
    const TimeSeries zero{m.dt, m.t0, std::vector<double>(m.size(), 0.0)};
    const auto x0 = alice_encrypt(zero, p, c.history);
    const auto x1 = alice_encrypt(m, p, c.history);
    const auto x2 = alice_encrypt(m2, p, c.history);
    std::vector<double> d1(x0.size()), d2(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
        d1[i] = x1.values[i] - x0.values[i];
        d2[i] = x2.values[i] - x0.values[i];
    }
    CHECK(pearson_correlation(d1, d2) < 0.999);
}

TEST_CASE("channel noise") {
    TimeSeries x{0.5, 0.0, std::vector<double>(100000, 0.3)};
    CHECK(channel(x, 0.0, 1).values == x.values);

    const double nu = 1e-3;
    const auto y = channel(x, nu, 7);
    double mean = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double n = y.values[i] - x.values[i];
        REQUIRE(std::abs(n) <= nu);
        mean += n;
    }
    mean /= static_cast<double>(y.size());
    CHECK(std::abs(mean) <= 3.0 * nu / std::sqrt(3.0 * static_cast<double>(y.size())));
    CHECK(channel(x, nu, 7).values == y.values);
    CHECK(channel(x, nu, 8).values != y.values);
    CHECK_THROWS_AS(channel(x, -1.0, 1), std::invalid_argument);

    const double snr = power_snr(TimeSeries{1.0, 0.0, {1.0, -1.0, 1.0, -1.0}}, TimeSeries{1.0, 0.0, {1.1, -1.1, 1.1, -1.1}});
    CHECK(snr == doctest::Approx(100.0));
}

TEST_CASE("Bob recovers nothing from an unmodulated carrier") {
    const CipherParams p;
    const auto c = warm_carrier(p);
    const auto x = alice_encrypt([](double) { return 0.0; }, p, c.history, 4000, c.t_start);
    const auto m_rec = bob_decrypt(x, p);
    CHECK(m_rec.size() == x.size() - 34);
    CHECK(m_rec.t0 == doctest::Approx(x.t0 + 17.0));
    for (double v : tail(m_rec.values, 50, 2)) REQUIRE(std::abs(v) <= 1e-8);
}

TEST_CASE("Bob inverts the noiseless cipher") {
    const CipherParams p;
    const auto c = warm_carrier(p);
    const FMMessageParams fm;
    const auto m = fm_message(fm, p.dt, 40000, c.t_start);
    const auto x = alice_encrypt(m, p, c.history);
    const auto m_rec = bob_decrypt(x, p);
    const std::size_t lag = 34;
    const std::span<const double> truth = std::span<const double>(m.values).subspan(lag);
    REQUIRE(truth.size() == m_rec.size());
    CHECK(*nmse(tail(m_rec.values, 2, 2), truth.subspan(2, truth.size() - 4)) <= 1e-2);

    CipherParams noisy = p;
    noisy.nu = 1e-3;
    const auto xn = channel(x, noisy.nu, 3);
    const auto raw = bob_decrypt(xn, noisy);
    const auto filtered = bob_decrypt(xn, noisy, BandSpec{fm.carrier / 4, fm.carrier * 4});
    const double raw_err = *nmse(raw.values, truth);
    const double filt_err = *nmse(filtered.values, truth);
    CHECK(raw_err > 1.0);
    CHECK(filt_err <= 0.3);
}

TEST_CASE("Bob rejects a ciphertext shorter than the delay") {
    const CipherParams p;
    TimeSeries x{0.5, 0.0, std::vector<double>(30, 0.5)};
    CHECK_THROWS_AS(bob_decrypt(x, p), std::invalid_argument);
    CipherParams odd = p;
    odd.mg.tau = 17.2;
    TimeSeries longer{0.5, 0.0, std::vector<double>(300, 0.5)};
    CHECK_THROWS_AS(bob_decrypt(longer, odd), std::invalid_argument);
}

TEST_CASE("Eve's attacker") {
    const CipherParams p;
    const auto c = warm_carrier(p);
    const auto m = fm_message(FMMessageParams{}, p.dt, 4000, c.t_start);
    const auto x = alice_encrypt(m, p, c.history);

    ReservoirConfig cfg;
    cfg.nodes = 60;
    cfg.feedback_scale = 0.0;
    cfg.delta = 0.5;
    cfg.timescale = 0.05;
    cfg.input_scale = 0.9;
    cfg.seed = 2;

    const TimeSeries zero{m.dt, m.t0, std::vector<double>(m.size(), 0.0)};
    const auto trivial = eve_train(x, zero, cfg, 100);
    CHECK(trivial.weights.readout->isZero(0.0));
    CHECK_FALSE(trivial.training_nmse.has_value());

    const auto att = eve_train(x, m, cfg, 100);
    REQUIRE(att.training_nmse.has_value());
    CHECK(*att.training_nmse < 1.0);

    // feed-forward: the output over the training span replays the harvest
    const auto replay = eve_decrypt(att, x);
    const std::vector<double> u(x.values);
    const auto h = harvest(att.weights, cfg, u, std::vector<double>(u.size(), 7.0), m.values, 100);
    const Vector fitted = h.rows * *att.weights.readout;
    for (Eigen::Index i = 0; i < fitted.size(); ++i) REQUIRE(replay.values[100 + i] == doctest::Approx(fitted(i)));

    auto with_feedback = cfg;
    with_feedback.feedback_scale = 1.0;
    CHECK_THROWS_AS(eve_train(x, m, with_feedback, 100), std::invalid_argument);
    CHECK_THROWS_AS(eve_train(x, m.slice(0, 100), cfg, 10), std::invalid_argument);
    TrainedAttacker untrained;
    CHECK_THROWS_AS(eve_decrypt(untrained, x), std::invalid_argument);
}
