#include "chaosrc/dynamics.hpp"
#include "chaosrc/emulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace chaosrc;

namespace {

struct MgData {
    TimeSeries train;
    TimeSeries test;
};

const MgData& mg_data() {
    static const MgData data = [] {
        const auto raw = integrate_mg(MGParams{}, DelayHistory::constant(0.5), 0.5, 2 * 4000);
        const auto s = resample(raw, 1.0);
        MgData d;
        d.train = s.slice(500, 2000);
        d.test = s.slice(2500, 1000);
        return d;
    }();
    return data;
}

ReservoirConfig mg_cfg() {
    ReservoirConfig cfg;
    cfg.nodes = 200;
    cfg.seed = 1;
    return cfg;
}

const TrainedEmulator& mg_emulator() {
    static const TrainedEmulator e = train_emulator(mg_data().train, mg_cfg(), 100);
    return e;
}

}  // namespace

TEST_CASE("emulator training on Mackey-Glass") {
    const auto& e = mg_emulator();
    REQUIRE(e.training_nmse.has_value());
    CHECK(*e.training_nmse < 1e-4);
    CHECK(e.w_out().size() == 201);
    CHECK(e.readout_rank > 0);
    const auto [lo, hi] = std::minmax_element(mg_data().train.values.begin() + 100, mg_data().train.values.end());
    CHECK(e.target_min == *lo);
    CHECK(e.target_max == *hi);
}

TEST_CASE("constant series gives an undefined NMSE and reproduces the constant") {
    TimeSeries s{1.0, 0.0, std::vector<double>(400, 0.7)};
    auto cfg = mg_cfg();
    cfg.nodes = 30;
    const auto e = train_emulator(s, cfg, 50);
    CHECK_FALSE(e.training_nmse.has_value());
    const std::vector<double> u(s.size(), cfg.input_bias);
    const auto h = harvest(e.weights, cfg, u, s.values, s.values, 50);
    CHECK(((h.rows * e.w_out()).array() - 0.7).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("autonomous runs") {
    const auto& e = mg_emulator();
    const auto empty = autonomous_run(e, 0, e.final_training_state);
    CHECK(empty.y.empty());
    CHECK_FALSE(empty.diverged);

    const auto a = autonomous_run(e, 500, e.final_training_state);
    const auto b = autonomous_run(e, 500, e.final_training_state);
    CHECK(a.y.values == b.y.values);
    CHECK(a.y.size() == 500);
    CHECK(a.windowed_nmse.empty());

    const double span = e.target_max - e.target_min;
    for (double v : a.y.values) {
        CHECK(v >= e.target_min - 0.2 * span);
        CHECK(v <= e.target_max + 0.2 * span);
    }
    // the first steps follow the true continuation
    CHECK(std::abs(a.y.values[0] - mg_data().test.values[0]) < 1e-2);

    CHECK_THROWS_AS(autonomous_run(e, 10, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("coupling with q = 0 everywhere is the autonomous run") {
    const auto& e = mg_emulator();
    const CouplingSchedule sched({{100, 300, 0.0}});
    const auto coupled = coupled_run(e, mg_data().test, sched, e.final_training_state);
    const auto free = autonomous_run(e, mg_data().test.size(), e.final_training_state);
    CHECK(coupled.y.values == free.y.values);
    CHECK(coupled.windowed_nmse.size() == 10);
}

TEST_CASE("full coupling reduces to one-step prediction") {
    const auto& e = mg_emulator();
    const auto& test = mg_data().test;
    const CouplingSchedule sched({{0, test.size(), 1.0}});
    const auto run = coupled_run(e, test, sched, e.final_training_state);
    REQUIRE(run.y.size() == test.size());
    const auto err = nmse(run.y.values, test.values);
    REQUIRE(err.has_value());
    CHECK(*err <= 10.0 * *e.training_nmse);
    CHECK(std::all_of(run.q.begin(), run.q.end(), [](double q) { return q == 1.0; }));
}

TEST_CASE("post-lock NMSE covers the final third of the segment") {
    const auto& e = mg_emulator();
    const auto& test = mg_data().test;
    const CouplingSegment seg{100, 400, 0.5};
    const auto run = coupled_run(e, test, CouplingSchedule({seg}), e.final_training_state);
    const auto got = post_lock_nmse(run, test, seg);
    const std::span<const double> y(run.y.values), t(test.values);
    REQUIRE(got.has_value());
    CHECK(*got == *nmse(y.subspan(300, 100), t.subspan(300, 100)));
    CHECK_FALSE(post_lock_nmse(run, test, CouplingSegment{900, 1200, 0.5}).has_value());
}

TEST_CASE("coupling schedule validation") {
    CHECK_NOTHROW(CouplingSchedule({{0, 10, 0.5}, {10, 20, 0.25}}));
    CHECK_THROWS_AS(CouplingSchedule({{0, 10, 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(CouplingSchedule({{0, 10, -0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(CouplingSchedule({{10, 10, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(CouplingSchedule({{0, 10, 0.5}, {5, 20, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(CouplingSchedule({{20, 30, 0.5}, {0, 10, 0.5}}), std::invalid_argument);

    const CouplingSchedule s({{5, 10, 0.3}});
    CHECK(s.q_at(4) == 0.0);
    CHECK(s.q_at(5) == 0.3);
    CHECK(s.q_at(9) == 0.3);
    CHECK(s.q_at(10) == 0.0);

    const auto& e = mg_emulator();
    TimeSeries shortie{1.0, 0.0, std::vector<double>(8, 0.5)};
    CHECK_THROWS_AS(coupled_run(e, shortie, s, e.final_training_state), std::invalid_argument);
}

TEST_CASE("divergent readout is truncated and flagged") {
    auto e = mg_emulator();
    const double bound = 1e3 * (e.target_max - e.target_min);
    Vector w = Vector::Zero(e.w_out().size());
    w(w.size() - 1) = 2.0 * bound / e.cfg.input_bias;
    e.weights.readout = w;
    const auto run = autonomous_run(e, 200, e.final_training_state);
    CHECK(run.diverged);
    CHECK(run.diverged_at == 0);
    CHECK(run.y.empty());
}
