#pragma once

// Echo state network core: weight construction, the leaky tanh update, the
// linear readout, teacher-forced state harvesting and least-squares training.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace chaosrc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Scalar hyperparameters of one reservoir.
struct ReservoirConfig {
    int nodes = 100;
    double timescale = 0.44;        // C
    double leak = 0.9;              // a; the state keeps (1 - C*a) of itself per step
    double spectral_radius = 0.79;  // target for the internal matrix
    double input_scale = 1.0;
    double feedback_scale = 1.0;    // 0 disables the feedback channel
    double input_bias = 0.2;        // constant u for emulation tasks
    double delta = 1.0;             // sampling interval in the driving system's time units
    std::uint64_t seed = 0;
    double reg_noise_amplitude = 0.0;  // half-width of uniform noise inside tanh, 0 = off

    double leak_factor() const { return 1.0 - timescale * leak; }

    /// Throws std::invalid_argument naming the first violated constraint.
    void validate() const;
};

/// Internal, input, feedback and (once trained) readout weights.
struct WeightSet {
    Matrix internal;
    Vector input;
    Vector feedback;
    std::optional<Vector> readout;  // length nodes + 1: [x, u]

    Eigen::Index nodes() const { return internal.rows(); }
};

using ReservoirState = Vector;

/// Design matrix and targets collected under teacher forcing.
struct StateHarvest {
    Matrix rows;     // M x (N+1), row n = [x(n), u(n)]
    Vector targets;  // M
    ReservoirState final_state;
};

struct ReadoutFit {
    Vector weights;
    std::optional<double> training_nmse;  // nullopt when the targets are constant
    Eigen::Index rank = 0;
    bool rank_deficient = false;
    bool underdetermined = false;  // fewer rows than unknowns
};

class SpectralRadiusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Largest eigenvalue magnitude of a square matrix (dense real Schur form).
double spectral_radius(const Matrix& m);

/// Draws all weights uniformly from [-1, 1] using cfg.seed, rescales the
/// internal matrix to cfg.spectral_radius and the vectors by their scale
/// factors. Throws SpectralRadiusError if the raw matrix has zero radius.
WeightSet build_reservoir(const ReservoirConfig& cfg);

/// x(n) = (1 - C a) x(n-1) + C tanh(w_in u + W x(n-1) + w_back d + noise).
/// `noise` is empty (off) or holds one value per node.
ReservoirState step(const ReservoirState& x_prev, double u, double d, const WeightSet& w,
                    const ReservoirConfig& cfg, std::span<const double> noise = {});

/// y = w_out . [x, u]
double readout(const ReservoirState& x, double u, const Vector& w_out);

/// Runs the reservoir from the zero state with teacher forcing: step n sees
/// input u(n) and feedback d(n-1) (d(-1) = 0). Rows n >= washout are kept.
/// Regularisation noise, when cfg enables it, is drawn from noise_seed.
StateHarvest harvest(const WeightSet& w, const ReservoirConfig& cfg, std::span<const double> inputs,
                     std::span<const double> teacher, std::span<const double> targets, std::size_t washout,
                     std::uint64_t noise_seed = 0);

/// Minimum-norm least-squares readout via a complete orthogonal decomposition.
/// `rank_threshold` is relative to the largest pivot; <= 0 uses Eigen's default.
ReadoutFit train_readout(const StateHarvest& h, double rank_threshold = 0.0);

/// Mean squared error over target variance (population convention).
/// Returns nullopt for a constant target. Throws on length mismatch or M < 2.
std::optional<double> nmse(std::span<const double> y, std::span<const double> target);

}  // namespace chaosrc
