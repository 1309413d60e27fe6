#pragma once

// Training a reservoir to emulate a sampled chaotic signal, then running it
// closed-loop, optionally weakly driven by the true signal.

#include "chaosrc/analysis.hpp"
#include "chaosrc/reservoir.hpp"
#include "chaosrc/series.hpp"

#include <optional>
#include <vector>

namespace chaosrc {

struct TrainedEmulator {
    WeightSet weights;  // readout set
    ReservoirConfig cfg;
    ReservoirState final_training_state;
    std::optional<double> training_nmse;
    double target_min = 0.0;
    double target_max = 0.0;
    Eigen::Index readout_rank = 0;

    const Vector& w_out() const { return *weights.readout; }
    double output(const ReservoirState& x) const { return readout(x, cfg.input_bias, w_out()); }
};

struct EmulationOptions {
    std::uint64_t noise_seed = 0;
    double rank_threshold = 0.0;  // see train_readout
};

/// Teacher forcing with u = cfg.input_bias, d(n) = s(n), target s(n).
TrainedEmulator train_emulator(const TimeSeries& s, const ReservoirConfig& cfg, std::size_t washout,
                               const EmulationOptions& opt = {});

/// Like train_emulator but reuses already built weights.
TrainedEmulator train_emulator(const TimeSeries& s, const ReservoirConfig& cfg, WeightSet weights,
                               std::size_t washout, const EmulationOptions& opt = {});

/// [start, end) in run steps with coupling q.
struct CouplingSegment {
    std::size_t start = 0;
    std::size_t end = 0;
    double q = 0.0;
};

class CouplingSchedule {
public:
    CouplingSchedule() = default;
    /// Throws std::invalid_argument for overlapping, unordered or out-of-range segments.
    explicit CouplingSchedule(std::vector<CouplingSegment> segments);

    double q_at(std::size_t n) const;
    const std::vector<CouplingSegment>& segments() const { return segments_; }
    std::size_t end() const { return segments_.empty() ? 0 : segments_.back().end; }

private:
    std::vector<CouplingSegment> segments_;
};

struct EmulatorRun {
    TimeSeries y;
    std::vector<double> q;          // coupling used for the feedback of each step
    NmseTrace windowed_nmse;        // only for coupled runs
    bool diverged = false;
    std::size_t diverged_at = 0;
};

/// Closed loop d(n) = y(n). The first feedback value is the readout of
/// start_state, so continuing from final_training_state follows on from training.
EmulatorRun autonomous_run(const TrainedEmulator& e, std::size_t steps, const ReservoirState& start_state);

/// d(n) = (1 - q) y(n) + q s(n), q from the schedule (0 outside segments).
/// s[k] is the true signal at run step k; the run lasts s.size() steps.
EmulatorRun coupled_run(const TrainedEmulator& e, const TimeSeries& s, const CouplingSchedule& sched,
                        const ReservoirState& start_state, std::size_t window = 100);

/// NMSE of y against s over the final third of a segment.
std::optional<double> post_lock_nmse(const EmulatorRun& run, const TimeSeries& s, const CouplingSegment& seg);

}  // namespace chaosrc
