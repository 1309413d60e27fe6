#include "chaosrc/dynamics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace chaosrc;

namespace {

double max_abs_diff(const Vec3& a, const Vec3& b) {
    return std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
}

}  // namespace

TEST_CASE("Mackey-Glass fixed points") {
    const MGParams p;
    const auto one = integrate_mg(p, DelayHistory::constant(1.0), 0.5, 100);
    CHECK(one.size() == 101);
    for (double v : one.values) REQUIRE(std::abs(v - 1.0) <= 1e-9);

    const auto zero = integrate_mg(p, DelayHistory::constant(0.0), 0.5, 100);
    for (double v : zero.values) REQUIRE(v == 0.0);
}

TEST_CASE("Mackey-Glass converges under step halving") {
    const MGParams p;
    const auto coarse = integrate_mg(p, DelayHistory::constant(0.5), 0.5, 7000);
    const auto fine = integrate_mg(p, DelayHistory::constant(0.5), 0.25, 14000);
    double worst = 0.0;
    for (std::size_t i = 0; i <= 1000; ++i) worst = std::max(worst, std::abs(coarse.values[i] - fine.values[2 * i]));
    CHECK(worst <= 1e-3);
    CHECK(coarse.time_at(1000) == doctest::Approx(500.0));
}

TEST_CASE("Mackey-Glass attractor stays in its usual range") {
    const auto s = integrate_mg(MGParams{}, DelayHistory::constant(0.5), 0.5, 14000);
    const auto [lo, hi] = std::minmax_element(s.values.begin() + 2000, s.values.end());
    CHECK(*lo > 0.2);
    CHECK(*hi < 1.45);
    CHECK(*hi - *lo > 0.8);
}

TEST_CASE("Mackey-Glass restart from a snapshot continues the trajectory") {
    const MGParams p;
    MackeyGlassIntegrator whole(p, DelayHistory::constant(0.5), 0.5);
    const auto full = whole.advance(300);

    MackeyGlassIntegrator first(p, DelayHistory::constant(0.5), 0.5);
    first.advance(200);
    CHECK(first.time() == doctest::Approx(100.0));
    MackeyGlassIntegrator second(p, first.snapshot(), 0.5, first.time());
    const auto rest = second.advance(100);
    for (std::size_t i = 0; i < 100; ++i) REQUIRE(std::abs(rest[i] - full[200 + i]) <= 1e-12);
}

TEST_CASE("Mackey-Glass is invariant under a shift of the time origin") {
    const MGParams p;
    const auto a = integrate_mg(p, DelayHistory::constant(0.5), 0.5, 400);
    const auto b = integrate_mg(p, DelayHistory::constant(0.5), 0.5, 400, {}, 250.0);
    CHECK(b.t0 == 250.0);
    CHECK(a.values == b.values);
}

TEST_CASE("identity hooks leave Mackey-Glass bit-identical") {
    const MGParams p;
    const auto plain = integrate_mg(p, DelayHistory::constant(0.5), 0.5, 500);
    MgDrive drive;
    drive.mix = [](double, double x) { return 0.75 * x + 0.25 * x; };
    drive.forcing = [](double) { return 0.0; };
    const auto hooked = integrate_mg(p, DelayHistory::constant(0.5), 0.5, 500, drive);
    CHECK(plain.values == hooked.values);
}

TEST_CASE("Mackey-Glass rejects bad setups and reports blow-up") {
    MGParams bad;
    bad.tau = -1.0;
    CHECK_THROWS_AS(integrate_mg(bad, DelayHistory::constant(0.5), 0.5, 10), std::invalid_argument);
    CHECK_THROWS_AS(integrate_mg(MGParams{}, DelayHistory::constant(0.5), 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(DelayHistory::grid(0.0, 0.5, {1.0}, {}), std::invalid_argument);
    const auto short_hist = DelayHistory::grid(0.0, 0.5, {1.0, 1.0}, {0.0, 0.0});
    CHECK_THROWS_AS(MackeyGlassIntegrator(MGParams{}, short_hist, 0.5), std::invalid_argument);

    MgDrive explode;
    explode.forcing = [](double t) { return t > 10.0 ? 1e300 : 0.0; };
    try {
        integrate_mg(MGParams{}, DelayHistory::constant(0.5), 0.5, 100, explode);
        FAIL("expected an integration error");
    } catch (const IntegrationError& e) {
        CHECK(e.step() > 10);
        CHECK(e.step() <= 100);
    }
}

TEST_CASE("Lorenz equilibria") {
    const LorenzParams p;
    const auto origin = integrate_lorenz(p, {0.0, 0.0, 0.0}, 0.02, 500);
    for (const auto& s : origin.values) REQUIRE((s[0] == 0.0 && s[1] == 0.0 && s[2] == 0.0));

    const double c = std::sqrt(p.b * (p.r - 1.0));
    CHECK(c == doctest::Approx(std::sqrt(72.0)));
    const Vec3 fixed{c, c, p.r - 1.0};
    const Vec3 d = lorenz_rhs(p, fixed);
    CHECK(std::abs(d[0]) <= 1e-12);
    CHECK(std::abs(d[1]) <= 1e-12);
    CHECK(std::abs(d[2]) <= 1e-12);
    const auto near = integrate_lorenz(p, fixed, 0.02, 50);
    for (const auto& s : near.values) REQUIRE(max_abs_diff(s, fixed) <= 1e-9);
}

TEST_CASE("Lorenz RK4 is fourth order") {
    const LorenzParams p;
    const Vec3 init{10.0, 0.0, 0.0};
    const auto ref = integrate_lorenz(p, init, 1e-5, 100000).values.back();
    auto err = [&](double h) {
        return max_abs_diff(integrate_lorenz(p, init, h, static_cast<std::size_t>(std::lround(1.0 / h))).values.back(), ref);
    };
    const double ratio = err(0.0025) / err(0.00125);
    CHECK(ratio >= 10.0);
    CHECK(ratio <= 22.0);
    CHECK(err(0.02) / err(0.01) > 10.0);
}

TEST_CASE("Lorenz trajectory properties") {
    const LorenzParams p;
    const auto traj = integrate_lorenz(p, {10.0, 0.0, 0.0}, 0.02, 5000);
    CHECK(traj.size() == 5001);
    CHECK(traj.values.front() == Vec3{10.0, 0.0, 0.0});

    const auto shifted = integrate_lorenz(p, {10.0, 0.0, 0.0}, 0.02, 5000, {}, 40.0);
    CHECK(shifted.values == traj.values);
    CHECK(shifted.time_at(0) == 40.0);

    const auto hooked = integrate_lorenz(p, {10.0, 0.0, 0.0}, 0.02, 5000, [](double, double x) { return x; });
    CHECK(hooked.values == traj.values);

    const auto x = resample(traj.component(0), 0.02, 0.01);
    double peak = 0.0;
    for (std::size_t i = 1000; i < x.size(); ++i) peak = std::max(peak, std::abs(x.values[i]));
    CHECK(peak > 0.15);
    CHECK(peak < 0.25);

    CHECK_THROWS_AS(integrate_lorenz(p, {1e200, 1e200, 1e200}, 0.02, 10), IntegrationError);
    LorenzParams bad;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(integrate_lorenz(bad, {1.0, 1.0, 1.0}, 0.02, 10), std::invalid_argument);
}

TEST_CASE("resample") {
    TimeSeries ts;
    ts.dt = 0.5;
    ts.t0 = 3.0;
    ts.values = {1.0, 2.0, 3.0, 4.0, 5.0};

    const auto same = resample(ts, 0.5);
    CHECK(same.values == ts.values);
    CHECK(same.dt == 0.5);
    CHECK(same.t0 == 3.0);

    const auto half = resample(ts, 1.0);
    CHECK(half.values == std::vector<double>{1.0, 3.0, 5.0});
    CHECK(half.dt == 1.0);

    const auto scaled = resample(ts, 1.0, 0.01, 1.0);
    CHECK(scaled.values[1] == doctest::Approx(1.03));

    try {
        resample(ts, 0.75);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("1.5") != std::string::npos);
    }
}
