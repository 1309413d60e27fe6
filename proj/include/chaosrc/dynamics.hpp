#pragma once

// Fixed-step RK4 integrators for the Mackey-Glass delay equation and the
// Lorenz system, and resampling of integrated traces onto the reservoir's
// sampling grid.

#include "chaosrc/series.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace chaosrc {

struct MGParams {
    double beta = 0.2;
    double gamma = 0.1;
    double tau = 17.0;
    int n_exp = 10;

    void validate() const;
};

struct LorenzParams {
    double sigma = 10.0;
    double r = 28.0;
    double b = 8.0 / 3.0;

    void validate() const;
};

/// Raised when a trajectory overflows or produces NaN.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Past of a delay system on [t0 - tau, t0]. Either an analytic function
/// (with its derivative) or a grid of values and derivatives saved from a
/// previous run.
class DelayHistory {
public:
    static DelayHistory constant(double value);
    static DelayHistory function(std::function<double(double)> value, std::function<double(double)> derivative);
    /// Grid samples ending at t_end, spacing dt, oldest first.
    static DelayHistory grid(double t_end, double dt, std::vector<double> values, std::vector<double> derivatives);

    double value(double t) const;
    double derivative(double t) const;
    bool is_grid() const { return !grid_values_.empty(); }
    double grid_dt() const { return grid_dt_; }
    double grid_end() const { return grid_end_; }
    const std::vector<double>& grid_values() const { return grid_values_; }
    const std::vector<double>& grid_derivatives() const { return grid_derivs_; }

private:
    std::function<double(double)> value_;
    std::function<double(double)> derivative_;
    double grid_end_ = 0.0;
    double grid_dt_ = 0.0;
    std::vector<double> grid_values_;
    std::vector<double> grid_derivs_;
};

/// Optional modifications of the Mackey-Glass right-hand side.
struct MgDrive {
    /// Added to dx/dt.
    std::function<double(double t)> forcing;
    /// Replacement for x(t) on the right-hand side, given the raw value.
    std::function<double(double t, double x)> mix;
    /// When true the delayed term reads mix(t - tau, x(t - tau)), i.e. the
    /// mixed trajectory; otherwise only the instantaneous -gamma*x is mixed.
    bool mix_delayed = true;
};

/// Stateful RK4 integrator of dx/dt = beta*xd/(1 + xd^n) - gamma*x + forcing,
/// xd = x(t - tau). The delayed value inside a step is a cubic Hermite
/// interpolant of the stored grid values and derivatives; when tau is a whole
/// number of steps the full-step lookups hit grid points exactly.
class MackeyGlassIntegrator {
public:
    MackeyGlassIntegrator(const MGParams& p, const DelayHistory& hist, double dt, double t0 = 0.0,
                          MgDrive drive = {});

    /// Advances `steps` steps; returns the new samples (not including the current one).
    std::vector<double> advance(std::size_t steps);

    double time() const;
    double value() const { return values_.back(); }
    std::size_t steps_taken() const { return steps_taken_; }
    /// Grid history covering the last tau, for restarting elsewhere.
    DelayHistory snapshot() const;

private:
    double rhs(double t, double x, double x_delayed) const;
    double delayed(std::size_t index, double fraction) const;

    MGParams p_;
    double dt_;
    double t0_;
    double lag_;  // tau / dt in steps
    std::size_t origin_;  // index of t0 in the buffers
    std::vector<double> values_;
    std::vector<double> derivs_;
    std::size_t steps_taken_ = 0;
    MgDrive drive_;
    double origin_right_deriv_ = 0.0;
};

/// Integrates `steps` steps from the history; returns steps + 1 samples
/// starting at t0 (the initial value included).
TimeSeries integrate_mg(const MGParams& p, const DelayHistory& hist, double dt, std::size_t steps,
                        const MgDrive& drive = {}, double t0 = 0.0);

Vec3 lorenz_rhs(const LorenzParams& p, const Vec3& s);

/// Hook replacing x on every right-hand side occurrence: x -> mix(t, x).
using LorenzMix = std::function<double(double t, double x)>;

/// Classical RK4 from `init`; returns steps + 1 samples including `init`.
Vec3Series integrate_lorenz(const LorenzParams& p, const Vec3& init, double dt, std::size_t steps,
                            const LorenzMix& mix = {}, double t0 = 0.0);

/// u(n) = scale * ts(t0 + n*delta) + offset. delta must be a whole multiple of ts.dt.
TimeSeries resample(const TimeSeries& ts, double delta, double scale = 1.0, double offset = 0.0);

}  // namespace chaosrc
