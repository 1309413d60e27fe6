#include "chaosrc/inverse_sync.hpp"

#include <cmath>
#include <stdexcept>

namespace chaosrc {

void DriveWindow::validate() const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("drive coupling q must lie in [0, 1]");
    if (!(t_off >= t_on)) throw std::invalid_argument("drive window must have t_off >= t_on");
}

HeldSignal::HeldSignal(const TimeSeries& rc_output, const DriveWindow& window, double scale)
    : rc_(&rc_output), scale_(scale) {
    window.validate();
    if (window.q == 0.0 || window.t_off == window.t_on) return;
    if (rc_output.empty() || !(rc_output.dt > 0.0)) throw std::invalid_argument("reservoir output is empty");
    if (rc_output.t0 > window.t_on + 1e-9 * rc_output.dt || rc_output.end_time() + rc_output.dt < window.t_off) {
        throw std::invalid_argument("reservoir output does not cover the drive window");
    }
    for (std::size_t i = 0; i < rc_output.size(); ++i) {
        const double t = rc_output.time_at(i);
        if (t + rc_output.dt < window.t_on || t > window.t_off) continue;
        if (!std::isfinite(rc_output.values[i])) {
            throw std::invalid_argument("reservoir output has a gap at t = " + format_double(t));
        }
    }
}

double HeldSignal::operator()(double t) const {
    const double pos = (t - rc_->t0) / rc_->dt;
    auto k = static_cast<long>(std::floor(pos + 1e-9));
    if (k < 0) k = 0;
    if (k >= static_cast<long>(rc_->size())) k = static_cast<long>(rc_->size()) - 1;
    return scale_ * rc_->values[static_cast<std::size_t>(k)];
}

TimeSeries mg_driven_by_rc(const MGParams& p, const TimeSeries& rc_output, const DriveWindow& window,
                           const DelayHistory& hist, double dt, std::size_t steps, double t0, MgMixScope scope) {
    const HeldSignal y(rc_output, window);
    MgDrive drive;
    if (window.q > 0.0) {
        drive.mix = [y, window](double t, double x) {
            return window.active(t) ? window.q * y(t) + (1.0 - window.q) * x : x;
        };
        drive.mix_delayed = scope == MgMixScope::MixedHistory;
    }
    return integrate_mg(p, hist, dt, steps, drive, t0);
}

Vec3Series lorenz_driven_by_rc(const LorenzParams& p, const TimeSeries& rc_output, const DriveWindow& window,
                               const Vec3& init, double dt, std::size_t steps, double t0, double rc_unscale) {
    const HeldSignal y(rc_output, window, rc_unscale);
    LorenzMix mix;
    if (window.q > 0.0) {
        mix = [y, window](double t, double x) {
            return window.active(t) ? window.q * y(t) + (1.0 - window.q) * x : x;
        };
    }
    return integrate_lorenz(p, init, dt, steps, mix, t0);
}

double sign_agreement(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("sign_agreement: bad lengths");
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::signbit(a[i]) == std::signbit(b[i])) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(a.size());
}

}  // namespace chaosrc
