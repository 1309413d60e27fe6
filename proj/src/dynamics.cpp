#include "chaosrc/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace chaosrc {

namespace {

double int_pow(double x, int n) {
    double result = 1.0;
    double base = x;
    for (int e = n; e > 0; e >>= 1) {
        if (e & 1) result *= base;
        base *= base;
    }
    return result;
}

bool blown_up(double v) { return !std::isfinite(v) || std::abs(v) > 1e150; }

}  // namespace

void MGParams::validate() const {
    if (!(beta > 0.0 && gamma > 0.0 && tau > 0.0 && n_exp > 0)) {
        throw std::invalid_argument("Mackey-Glass parameters must all be strictly positive");
    }
}

void LorenzParams::validate() const {
    if (!(sigma > 0.0 && r > 0.0 && b > 0.0)) {
        throw std::invalid_argument("Lorenz parameters must all be strictly positive");
    }
}

DelayHistory DelayHistory::constant(double value) {
    DelayHistory h;
    h.value_ = [value](double) { return value; };
    h.derivative_ = [](double) { return 0.0; };
    return h;
}

DelayHistory DelayHistory::function(std::function<double(double)> value, std::function<double(double)> derivative) {
    if (!value || !derivative) throw std::invalid_argument("DelayHistory::function: both callables are required");
    DelayHistory h;
    h.value_ = std::move(value);
    h.derivative_ = std::move(derivative);
    return h;
}

DelayHistory DelayHistory::grid(double t_end, double dt, std::vector<double> values, std::vector<double> derivatives) {
    if (values.empty() || values.size() != derivatives.size()) {
        throw std::invalid_argument("DelayHistory::grid: values and derivatives must be non-empty and equal length");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("DelayHistory::grid: dt must be positive");
    DelayHistory h;
    h.grid_end_ = t_end;
    h.grid_dt_ = dt;
    h.grid_values_ = std::move(values);
    h.grid_derivs_ = std::move(derivatives);
    return h;
}

double DelayHistory::value(double t) const {
    if (value_) return value_(t);
    const double pos = static_cast<double>(grid_values_.size() - 1) - (grid_end_ - t) / grid_dt_;
    const auto k = static_cast<long>(std::lround(pos));
    if (std::abs(pos - static_cast<double>(k)) > 1e-6 || k < 0 || k >= static_cast<long>(grid_values_.size())) {
        throw std::out_of_range("DelayHistory: time not on the stored grid");
    }
    return grid_values_[static_cast<std::size_t>(k)];
}

double DelayHistory::derivative(double t) const {
    if (derivative_) return derivative_(t);
    const double pos = static_cast<double>(grid_values_.size() - 1) - (grid_end_ - t) / grid_dt_;
    const auto k = static_cast<long>(std::lround(pos));
    if (std::abs(pos - static_cast<double>(k)) > 1e-6 || k < 0 || k >= static_cast<long>(grid_derivs_.size())) {
        throw std::out_of_range("DelayHistory: time not on the stored grid");
    }
    return grid_derivs_[static_cast<std::size_t>(k)];
}

MackeyGlassIntegrator::MackeyGlassIntegrator(const MGParams& p, const DelayHistory& hist, double dt, double t0,
                                             MgDrive drive)
    : p_(p), dt_(dt), t0_(t0), drive_(std::move(drive)) {
    p_.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("MackeyGlassIntegrator: dt must be positive");
    lag_ = p_.tau / dt_;
    if (lag_ < 1.0) throw std::invalid_argument("MackeyGlassIntegrator: tau must be at least one step");
    const double rounded = std::round(lag_);
    if (std::abs(lag_ - rounded) < 1e-9 * lag_) lag_ = rounded;
    origin_ = static_cast<std::size_t>(std::ceil(lag_));

    if (hist.is_grid()) {
        if (std::abs(hist.grid_dt() - dt_) > 1e-12 * dt_) {
            throw std::invalid_argument("MackeyGlassIntegrator: grid history spacing differs from dt");
        }
        if (hist.grid_values().size() < origin_ + 1) {
            throw std::invalid_argument("MackeyGlassIntegrator: grid history shorter than the delay");
        }
        const std::size_t skip = hist.grid_values().size() - (origin_ + 1);
        values_.assign(hist.grid_values().begin() + static_cast<std::ptrdiff_t>(skip), hist.grid_values().end());
        derivs_.assign(hist.grid_derivatives().begin() + static_cast<std::ptrdiff_t>(skip),
                       hist.grid_derivatives().end());
    } else {
        values_.resize(origin_ + 1);
        derivs_.resize(origin_ + 1);
        for (std::size_t k = 0; k <= origin_; ++k) {
            const double t = t0_ - static_cast<double>(origin_ - k) * dt_;
            values_[k] = hist.value(t);
            derivs_[k] = hist.derivative(t);
        }
    }
    // The interval [t0, t0 + dt] uses the right-hand derivative at t0, which
    // can differ from the history's derivative there.
    origin_right_deriv_ = rhs(t0_, values_[origin_], delayed(origin_, 0.0));
}

double MackeyGlassIntegrator::time() const { return t0_ + static_cast<double>(steps_taken_) * dt_; }

double MackeyGlassIntegrator::rhs(double t, double x, double x_delayed) const {
    double xi = x;
    double xd = x_delayed;
    if (drive_.mix) {
        xi = drive_.mix(t, x);
        if (drive_.mix_delayed) xd = drive_.mix(t - p_.tau, x_delayed);
    }
    double dx = p_.beta * xd / (1.0 + int_pow(xd, p_.n_exp)) - p_.gamma * xi;
    if (drive_.forcing) dx += drive_.forcing(t);
    return dx;
}

double MackeyGlassIntegrator::delayed(std::size_t index, double fraction) const {
    const double pos = static_cast<double>(index) + fraction - lag_;
    const double k_floor = std::floor(pos);
    const auto k = static_cast<std::size_t>(k_floor);
    const double theta = pos - k_floor;
    if (theta == 0.0) return values_[k];
    const double m0 = (k == origin_) ? origin_right_deriv_ : derivs_[k];
    const double m1 = derivs_[k + 1];
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + theta;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * values_[k] + h10 * dt_ * m0 + h01 * values_[k + 1] + h11 * dt_ * m1;
}

std::vector<double> MackeyGlassIntegrator::advance(std::size_t steps) {
    std::vector<double> out;
    out.reserve(steps);
    values_.reserve(values_.size() + steps);
    derivs_.reserve(derivs_.size() + steps);
    const double half = 0.5 * dt_;
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t i = values_.size() - 1;
        const double t = t0_ + static_cast<double>(i - origin_) * dt_;
        const double x = values_[i];
        const double d_mid = delayed(i, 0.5);
        const double k1 = rhs(t, x, delayed(i, 0.0));
        const double k2 = rhs(t + half, x + half * k1, d_mid);
        const double k3 = rhs(t + half, x + half * k2, d_mid);
        const double k4 = rhs(t + dt_, x + dt_ * k3, delayed(i, 1.0));
        const double x_new = x + dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (blown_up(x_new)) throw IntegrationError("Mackey-Glass integration diverged", steps_taken_ + 1);
        values_.push_back(x_new);
        derivs_.push_back(0.0);
        derivs_.back() = rhs(t + dt_, x_new, delayed(i + 1, 0.0));
        ++steps_taken_;
        out.push_back(x_new);
    }
    return out;
}

DelayHistory MackeyGlassIntegrator::snapshot() const {
    const std::size_t count = origin_ + 1;
    const auto first = static_cast<std::ptrdiff_t>(values_.size() - count);
    std::vector<double> v(values_.begin() + first, values_.end());
    std::vector<double> d(derivs_.begin() + first, derivs_.end());
    if (steps_taken_ == 0) d.back() = origin_right_deriv_;
    return DelayHistory::grid(time(), dt_, std::move(v), std::move(d));
}

TimeSeries integrate_mg(const MGParams& p, const DelayHistory& hist, double dt, std::size_t steps,
                        const MgDrive& drive, double t0) {
    if (steps < 1) throw std::invalid_argument("integrate_mg: steps must be >= 1");
    MackeyGlassIntegrator integrator(p, hist, dt, t0, drive);
    TimeSeries ts{dt, t0, {}};
    ts.values.reserve(steps + 1);
    ts.values.push_back(integrator.value());
    const auto rest = integrator.advance(steps);
    ts.values.insert(ts.values.end(), rest.begin(), rest.end());
    return ts;
}

Vec3 lorenz_rhs(const LorenzParams& p, const Vec3& s) {
    return {p.sigma * (s[1] - s[0]), -s[0] * s[2] + p.r * s[0] - s[1], s[0] * s[1] - p.b * s[2]};
}

Vec3Series integrate_lorenz(const LorenzParams& p, const Vec3& init, double dt, std::size_t steps,
                            const LorenzMix& mix, double t0) {
    p.validate();
    if (steps < 1) throw std::invalid_argument("integrate_lorenz: steps must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_lorenz: dt must be positive");

    auto field = [&](double t, Vec3 s) {
        if (mix) s[0] = mix(t, s[0]);
        return lorenz_rhs(p, s);
    };
    auto axpy = [](const Vec3& s, double h, const Vec3& k) {
        return Vec3{s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]};
    };

    Vec3Series out{dt, t0, {}};
    out.values.reserve(steps + 1);
    out.values.push_back(init);
    Vec3 s = init;
    const double half = 0.5 * dt;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;
        const Vec3 k1 = field(t, s);
        const Vec3 k2 = field(t + half, axpy(s, half, k1));
        const Vec3 k3 = field(t + half, axpy(s, half, k2));
        const Vec3 k4 = field(t + dt, axpy(s, dt, k3));
        for (int c = 0; c < 3; ++c) s[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        if (blown_up(s[0]) || blown_up(s[1]) || blown_up(s[2])) {
            throw IntegrationError("Lorenz integration diverged", i + 1);
        }
        out.values.push_back(s);
    }
    return out;
}

TimeSeries resample(const TimeSeries& ts, double delta, double scale, double offset) {
    if (!(delta > 0.0)) throw std::invalid_argument("resample: delta must be positive");
    const double ratio = delta / ts.dt;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "resample: delta/dt = " << ratio << " is not a positive integer";
        throw std::invalid_argument(msg.str());
    }
    const auto stride = static_cast<std::size_t>(k);
    TimeSeries out{ts.dt * k, ts.t0, {}};
    out.values.reserve(ts.size() / stride + 1);
    for (std::size_t i = 0; i < ts.size(); i += stride) out.values.push_back(scale * ts.values[i] + offset);
    return out;
}

}  // namespace chaosrc
