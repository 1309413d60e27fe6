#include "chaosrc/reservoir.hpp"

#include "chaosrc/series.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace chaosrc {

void ReservoirConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("reservoir config: " + what); };
    if (nodes < 1) fail("nodes must be >= 1");
    const double ca = timescale * leak;
    if (!(ca > 0.0 && ca <= 1.0)) fail("timescale*leak must lie in (0, 1]");
    if (!(timescale > 0.0)) fail("timescale must be positive");
    if (!(spectral_radius > 0.0)) fail("spectral_radius must be positive");
    if (!std::isfinite(input_scale) || !std::isfinite(feedback_scale)) fail("scales must be finite");
    if (!std::isfinite(input_bias)) fail("input_bias must be finite");
    if (!(delta > 0.0)) fail("delta must be positive");
    if (!(reg_noise_amplitude >= 0.0)) fail("reg_noise_amplitude must be >= 0");
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix is not square");
    if (!m.allFinite()) throw std::invalid_argument("spectral_radius: non-finite entry");
    if (m.rows() == 0) return 0.0;
    if (m.rows() == 1) return std::abs(m(0, 0));
    const Eigen::Index max_iterations = 100 * m.rows();
    Eigen::EigenSolver<Matrix> solver;
    solver.setMaxIterations(max_iterations);
    solver.compute(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw SpectralRadiusError("spectral_radius: real Schur iteration did not converge within " +
                                  std::to_string(max_iterations) + " iterations");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

WeightSet build_reservoir(const ReservoirConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = cfg.nodes;
    Rng rng(cfg.seed);
    WeightSet w;
    w.internal.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) w.internal(i, j) = rng.symmetric(1.0);
    }
    w.input.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) w.input(i) = rng.symmetric(1.0);
    w.feedback.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) w.feedback(i) = rng.symmetric(1.0);

    const double raw_radius = spectral_radius(w.internal);
    if (!(raw_radius > 1e-300)) {
        throw SpectralRadiusError("build_reservoir: raw internal matrix has zero spectral radius");
    }
    w.internal *= cfg.spectral_radius / raw_radius;
    w.input *= cfg.input_scale;
    if (cfg.feedback_scale == 0.0) {
        w.feedback.setZero();
    } else {
        w.feedback *= cfg.feedback_scale;
    }
    return w;
}

ReservoirState step(const ReservoirState& x_prev, double u, double d, const WeightSet& w,
                    const ReservoirConfig& cfg, std::span<const double> noise) {
    Vector arg = w.internal * x_prev;
    arg += u * w.input;
    arg += d * w.feedback;
    if (!noise.empty()) {
        if (static_cast<Eigen::Index>(noise.size()) != arg.size()) {
            throw std::invalid_argument("step: noise length differs from node count");
        }
        arg += Eigen::Map<const Vector>(noise.data(), arg.size());
    }
    return cfg.leak_factor() * x_prev + cfg.timescale * arg.array().tanh().matrix();
}

double readout(const ReservoirState& x, double u, const Vector& w_out) {
    if (w_out.size() != x.size() + 1) throw std::invalid_argument("readout: w_out must have N+1 entries");
    return w_out.head(x.size()).dot(x) + w_out(x.size()) * u;
}

StateHarvest harvest(const WeightSet& w, const ReservoirConfig& cfg, std::span<const double> inputs,
                     std::span<const double> teacher, std::span<const double> targets, std::size_t washout,
                     std::uint64_t noise_seed) {
    const std::size_t m = inputs.size();
    if (teacher.size() != m || targets.size() != m) {
        throw std::invalid_argument("harvest: inputs, teacher and targets must have equal length");
    }
    if (washout >= m) throw std::invalid_argument("harvest: washout must be shorter than the series");
    const Eigen::Index n = w.nodes();

    StateHarvest h;
    h.rows.resize(static_cast<Eigen::Index>(m - washout), n + 1);
    h.targets.resize(static_cast<Eigen::Index>(m - washout));

    Rng rng(noise_seed);
    std::vector<double> noise;
    if (cfg.reg_noise_amplitude > 0.0) noise.resize(static_cast<std::size_t>(n));

    ReservoirState x = Vector::Zero(n);
    double d_prev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        for (auto& v : noise) v = rng.symmetric(cfg.reg_noise_amplitude);
        x = step(x, inputs[k], d_prev, w, cfg, noise);
        d_prev = teacher[k];
        if (k >= washout) {
            const auto r = static_cast<Eigen::Index>(k - washout);
            h.rows.row(r).head(n) = x.transpose();
            h.rows(r, n) = inputs[k];
            h.targets(r) = targets[k];
        }
    }
    h.final_state = std::move(x);
    return h;
}

ReadoutFit train_readout(const StateHarvest& h, double rank_threshold) {
    if (h.rows.rows() != h.targets.size()) {
        throw std::invalid_argument("train_readout: row count differs from target count");
    }
    ReadoutFit fit;
    fit.underdetermined = h.rows.rows() < h.rows.cols();

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    if (rank_threshold > 0.0) cod.setThreshold(rank_threshold);
    cod.compute(h.rows);
    fit.weights = cod.solve(h.targets);
    fit.rank = cod.rank();
    fit.rank_deficient = fit.rank < std::min(h.rows.rows(), h.rows.cols());

    if (h.targets.size() >= 2) {
        const Vector fitted = h.rows * fit.weights;
        fit.training_nmse = nmse(std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())),
                                 std::span<const double>(h.targets.data(), static_cast<std::size_t>(h.targets.size())));
    }
    return fit;
}

std::optional<double> nmse(std::span<const double> y, std::span<const double> target) {
    if (y.size() != target.size()) throw std::invalid_argument("nmse: length mismatch");
    const std::size_t m = target.size();
    if (m < 2) throw std::invalid_argument("nmse: need at least two samples");
    const auto [lo, hi] = std::minmax_element(target.begin(), target.end());
    if (*lo == *hi) return std::nullopt;

    double mean = 0.0;
    for (double v : target) mean += v;
    mean /= static_cast<double>(m);
    double err = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = y[i] - target[i];
        const double c = target[i] - mean;
        err += e * e;
        var += c * c;
    }
    if (var == 0.0) return std::nullopt;
    return (err / static_cast<double>(m)) / (var / static_cast<double>(m));
}

}  // namespace chaosrc
