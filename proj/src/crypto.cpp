#include "chaosrc/crypto.hpp"

#include "chaosrc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chaosrc {

void CipherParams::validate() const {
    mg.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("cipher epsilon must be positive");
    if (!(nu >= 0.0)) throw std::invalid_argument("channel noise nu must be non-negative");
    if (!(dt > 0.0)) throw std::invalid_argument("cipher dt must be positive");
}

double CipherParams::f(double v) const { return mg.beta / mg.gamma * v / (1.0 + std::pow(v, mg.n_exp)); }

MGParams CipherParams::equivalent_mg() const {
    MGParams q = mg;
    q.beta = mg.beta / (mg.gamma * epsilon);
    q.gamma = 1.0 / epsilon;
    return q;
}

namespace {

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

// Four-point Lagrange cubic through the samples around t.
double cubic_at(const TimeSeries& s, double t) {
    const double pos = (t - s.t0) / s.dt;
    const long n = static_cast<long>(s.size());
    long k = static_cast<long>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    if (frac == 0.0 && k >= 0 && k < n) return s.values[static_cast<std::size_t>(k)];
    k = std::clamp(k - 1, 0L, std::max(n - 4, 0L));
    if (n < 4) throw std::invalid_argument("message series needs at least four samples");
    const double x = pos - static_cast<double>(k);
    const double* v = s.values.data() + k;
    return v[0] * (x - 1) * (x - 2) * (x - 3) / -6.0 + v[1] * x * (x - 2) * (x - 3) / 2.0 +
           v[2] * x * (x - 1) * (x - 3) / -2.0 + v[3] * x * (x - 1) * (x - 2) / 6.0;
}

// Central finite-difference derivative of the given order (2, 4 or 6) on a
// uniform grid, dropping to lower orders near the ends.
std::vector<double> grid_derivative(const std::vector<double>& v, double dt, int order) {
    const std::size_t n = v.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    for (std::size_t i = 0; i < n; ++i) {
        if (order >= 6 && i >= 3 && i + 3 < n) {
            d[i] = (-v[i - 3] + 9.0 * v[i - 2] - 45.0 * v[i - 1] + 45.0 * v[i + 1] - 9.0 * v[i + 2] + v[i + 3]) /
                   (60.0 * dt);
        } else if (order >= 4 && i >= 2 && i + 2 < n) {
            d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * dt);
        } else if (i >= 1 && i + 1 < n) {
            d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
        } else if (i == 0) {
            d[i] = (v[1] - v[0]) / dt;
        } else {
            d[i] = (v[n - 1] - v[n - 2]) / dt;
        }
    }
    return d;
}

double hermite(double y0, double y1, double m0, double m1, double h, double theta) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * m1;
}

}  // namespace

TimeSeries alice_encrypt(const std::function<double(double)>& m, const CipherParams& p, const DelayHistory& hist,
                         std::size_t steps, double t0) {
    p.validate();
    MgDrive drive;
    const double inv_eps = 1.0 / p.epsilon;
    drive.forcing = [m, inv_eps](double t) { return inv_eps * m(t); };
    return integrate_mg(p.equivalent_mg(), hist, p.dt, steps, drive, t0);
}

TimeSeries alice_encrypt(const TimeSeries& m, const CipherParams& p, const DelayHistory& hist) {
    if (m.size() < 2) throw std::invalid_argument("alice_encrypt: message needs at least two samples");
    if (!same_step(m.dt, p.dt)) throw std::invalid_argument("alice_encrypt: message not sampled at the cipher dt");
    return alice_encrypt([&m](double t) { return cubic_at(m, t); }, p, hist, m.size() - 1, m.t0);
}

TimeSeries channel(const TimeSeries& x, double nu, std::uint64_t seed) {
    if (!(nu >= 0.0)) throw std::invalid_argument("channel: nu must be non-negative");
    TimeSeries out = x;
    if (nu == 0.0) return out;
    Rng rng(seed);
    for (double& v : out.values) v += rng.symmetric(nu);
    return out;
}

TimeSeries bob_decrypt(const TimeSeries& x_prime, const CipherParams& p, const std::optional<BandSpec>& filter) {
    p.validate();
    if (!same_step(x_prime.dt, p.dt)) throw std::invalid_argument("bob_decrypt: ciphertext not sampled at the cipher dt");
    const double lag_real = p.mg.tau / p.dt;
    const auto lag = static_cast<std::size_t>(std::llround(lag_real));
    if (std::abs(lag_real - static_cast<double>(lag)) > 1e-9 * lag_real) {
        throw std::invalid_argument("bob_decrypt: tau must be a whole number of steps");
    }
    if (x_prime.size() < lag + 3) throw std::invalid_argument("bob_decrypt: ciphertext shorter than one delay");

    const auto& xv = x_prime.values;
    std::vector<double> dx = grid_derivative(xv, p.dt, 6);
    const std::size_t count = xv.size() - lag;
    TimeSeries out{p.dt, x_prime.time_at(lag), std::vector<double>(count)};

    // Replica on samples lag..end; y[j] pairs with x'[lag + j], delayed input x'[j].
    auto decode = [&]() {
        auto g = [&](std::size_t i, double theta) {
            const double xd = theta == 0.0 ? xv[i] : hermite(xv[i], xv[i + 1], dx[i], dx[i + 1], p.dt, theta);
            return p.f(xd);
        };
        std::vector<double> y(count);
        y[0] = xv[lag];
        const double h = p.dt;
        auto rhs = [&p](double yy, double gg) { return (-yy + gg) / p.epsilon; };
        for (std::size_t j = 0; j + 1 < count; ++j) {
            const double g0 = g(j, 0.0);
            const double gh = g(j, 0.5);
            const double g1 = g(j + 1, 0.0);
            const double k1 = rhs(y[j], g0);
            const double k2 = rhs(y[j] + 0.5 * h * k1, gh);
            const double k3 = rhs(y[j] + 0.5 * h * k2, gh);
            const double k4 = rhs(y[j] + h * k3, g1);
            y[j + 1] = y[j] + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        std::vector<double> z(count);
        for (std::size_t j = 0; j < count; ++j) z[j] = xv[lag + j] - y[j];
        const std::vector<double> dz = grid_derivative(z, p.dt, 2);
        for (std::size_t j = 0; j < count; ++j) out.values[j] = p.epsilon * dz[j] + z[j];
    };

    // Slopes refined from the cipher equation with the decoded message.
    decode();
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = lag + 3; i + 3 < xv.size(); ++i) {
            dx[i] = (-xv[i] + p.f(xv[i - lag]) + out.values[i - lag]) / p.epsilon;
        }
        decode();
    }
    if (filter) out = bandpass_filter(out, filter->f_lo, filter->f_hi);
    return out;
}

TrainedAttacker eve_train(const TimeSeries& x_prime, const TimeSeries& m, const ReservoirConfig& cfg,
                          std::size_t washout) {
    cfg.validate();
    if (cfg.feedback_scale != 0.0) throw std::invalid_argument("eve_train: the attacker must have feedback off");
    if (x_prime.size() != m.size() || !same_step(x_prime.dt, m.dt) || std::abs(x_prime.t0 - m.t0) > 1e-9 * m.dt) {
        throw std::invalid_argument("eve_train: ciphertext and message are not aligned");
    }
    const TimeSeries u = resample(x_prime, cfg.delta);
    const TimeSeries target = resample(m, cfg.delta);
    if (u.size() <= washout) throw std::invalid_argument("eve_train: series not longer than washout");

    TrainedAttacker att;
    att.cfg = cfg;
    att.weights = build_reservoir(cfg);
    const std::vector<double> teacher(u.size(), 0.0);
    const StateHarvest h = harvest(att.weights, cfg, u.values, teacher, target.values, washout);
    ReadoutFit fit = train_readout(h);
    att.weights.readout = std::move(fit.weights);
    att.training_nmse = fit.training_nmse;
    att.final_state = h.final_state;
    return att;
}

TimeSeries eve_decrypt(const TrainedAttacker& att, const TimeSeries& x_prime, const std::optional<ReservoirState>& start) {
    if (!att.weights.readout) throw std::invalid_argument("eve_decrypt: attacker is untrained");
    const TimeSeries u = resample(x_prime, att.cfg.delta);
    ReservoirState x = start ? *start : ReservoirState::Zero(att.weights.nodes());
    if (x.size() != att.weights.nodes()) throw std::invalid_argument("eve_decrypt: start state has wrong size");
    TimeSeries out{u.dt, u.t0, std::vector<double>(u.size())};
    for (std::size_t n = 0; n < u.size(); ++n) {
        x = step(x, u.values[n], 0.0, att.weights, att.cfg);
        out.values[n] = readout(x, u.values[n], *att.weights.readout);
    }
    return out;
}

double power_snr(const TimeSeries& clean, const TimeSeries& noisy) {
    if (clean.size() != noisy.size() || clean.size() < 2) throw std::invalid_argument("power_snr: length mismatch");
    double mean = 0.0;
    for (double v : clean.values) mean += v;
    mean /= static_cast<double>(clean.size());
    double carrier = 0.0;
    double noise = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        carrier += (clean.values[i] - mean) * (clean.values[i] - mean);
        noise += (noisy.values[i] - clean.values[i]) * (noisy.values[i] - clean.values[i]);
    }
    return noise > 0.0 ? carrier / noise : INFINITY;
}

}  // namespace chaosrc
