#pragma once

// Driving a chaotic system with a trained reservoir's output: inside the
// drive window x on the right-hand side becomes q*y_rc(t) + (1-q)*x(t).

#include "chaosrc/dynamics.hpp"
#include "chaosrc/series.hpp"

#include <span>

namespace chaosrc {

/// Drive active for t_on <= t < t_off with coupling q.
struct DriveWindow {
    double q = 0.25;
    double t_on = 0.0;
    double t_off = 0.0;

    void validate() const;
    bool active(double t) const { return t >= t_on && t < t_off; }
};

enum class MgMixScope {
    MixedHistory,      // the delayed term also sees the driven (mixed) past
    InstantaneousOnly  // only -gamma*x is mixed
};

/// Reservoir output held constant between its samples: value of the sample
/// at or before t. Rejects a series that does not cover [t_on, t_off] or
/// holds non-finite samples.
class HeldSignal {
public:
    HeldSignal(const TimeSeries& rc_output, const DriveWindow& window, double scale = 1.0);
    double operator()(double t) const;

private:
    const TimeSeries* rc_;
    double scale_;
};

/// Integrates `steps` steps of Mackey-Glass from `hist` starting at t0.
TimeSeries mg_driven_by_rc(const MGParams& p, const TimeSeries& rc_output, const DriveWindow& window,
                           const DelayHistory& hist, double dt, std::size_t steps, double t0 = 0.0,
                           MgMixScope scope = MgMixScope::MixedHistory);

/// rc_output is in the reservoir's units (Lorenz x times 0.01) and is
/// multiplied by `rc_unscale` before mixing.
inline constexpr double kLorenzRcUnscale = 100.0;
Vec3Series lorenz_driven_by_rc(const LorenzParams& p, const TimeSeries& rc_output, const DriveWindow& window,
                               const Vec3& init, double dt, std::size_t steps, double t0 = 0.0,
                               double rc_unscale = kLorenzRcUnscale);

/// Fraction of samples where a and b have the same sign.
double sign_agreement(std::span<const double> a, std::span<const double> b);

}  // namespace chaosrc
