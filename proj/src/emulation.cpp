#include "chaosrc/emulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chaosrc {

TrainedEmulator train_emulator(const TimeSeries& s, const ReservoirConfig& cfg, std::size_t washout,
                               const EmulationOptions& opt) {
    return train_emulator(s, cfg, build_reservoir(cfg), washout, opt);
}

TrainedEmulator train_emulator(const TimeSeries& s, const ReservoirConfig& cfg, WeightSet weights,
                               std::size_t washout, const EmulationOptions& opt) {
    cfg.validate();
    if (s.size() <= washout) throw std::invalid_argument("train_emulator: series not longer than washout");
    const std::vector<double> inputs(s.size(), cfg.input_bias);
    const StateHarvest h = harvest(weights, cfg, inputs, s.values, s.values, washout, opt.noise_seed);
    ReadoutFit fit = train_readout(h, opt.rank_threshold);

    TrainedEmulator e;
    e.cfg = cfg;
    e.weights = std::move(weights);
    e.weights.readout = std::move(fit.weights);
    e.final_training_state = h.final_state;
    e.training_nmse = fit.training_nmse;
    e.readout_rank = fit.rank;
    const auto [lo, hi] = std::minmax_element(s.values.begin() + static_cast<std::ptrdiff_t>(washout), s.values.end());
    e.target_min = *lo;
    e.target_max = *hi;
    return e;
}

CouplingSchedule::CouplingSchedule(std::vector<CouplingSegment> segments) : segments_(std::move(segments)) {
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& seg = segments_[i];
        const std::string where = "coupling segment " + std::to_string(i);
        if (!(seg.q >= 0.0 && seg.q <= 1.0)) throw std::invalid_argument(where + ": q must lie in [0, 1]");
        if (seg.end <= seg.start) throw std::invalid_argument(where + ": end must exceed start");
        if (i > 0 && seg.start < prev_end) throw std::invalid_argument(where + ": overlaps or precedes the previous one");
        prev_end = seg.end;
    }
}

double CouplingSchedule::q_at(std::size_t n) const {
    for (const auto& seg : segments_) {
        if (n >= seg.start && n < seg.end) return seg.q;
    }
    return 0.0;
}

namespace {

double divergence_bound(const TrainedEmulator& e) {
    const double range = e.target_max - e.target_min;
    const double scale = range > 0.0 ? range : std::max(1.0, std::abs(e.target_max));
    return 1e3 * scale;
}

}  // namespace

EmulatorRun autonomous_run(const TrainedEmulator& e, std::size_t steps, const ReservoirState& start_state) {
    return coupled_run(e, TimeSeries{e.cfg.delta, 0.0, std::vector<double>(steps, 0.0)}, CouplingSchedule{},
                       start_state, 0);
}

EmulatorRun coupled_run(const TrainedEmulator& e, const TimeSeries& s, const CouplingSchedule& sched,
                        const ReservoirState& start_state, std::size_t window) {
    if (!e.weights.readout) throw std::invalid_argument("emulator has no readout weights");
    if (start_state.size() != e.weights.nodes()) throw std::invalid_argument("start state has wrong size");
    if (sched.end() > s.size()) throw std::invalid_argument("coupling schedule extends past the driving series");

    const double bound = divergence_bound(e);
    const double u = e.cfg.input_bias;
    EmulatorRun run;
    run.y = TimeSeries{s.dt, s.t0, {}};
    run.y.values.reserve(s.size());
    run.q.reserve(s.size());

    ReservoirState x = start_state;
    double d = e.output(x);
    for (std::size_t n = 0; n < s.size(); ++n) {
        x = step(x, u, d, e.weights, e.cfg);
        const double y = e.output(x);
        if (!std::isfinite(y) || std::abs(y) > bound) {
            run.diverged = true;
            run.diverged_at = n;
            break;
        }
        const double q = sched.q_at(n);
        run.y.values.push_back(y);
        run.q.push_back(q);
        d = (q == 0.0) ? y : (1.0 - q) * y + q * s.values[n];
    }
    if (window >= 2 && !run.diverged && s.size() >= window) {
        run.windowed_nmse = windowed_nmse(run.y.values, s.values, window);
    }
    return run;
}

std::optional<double> post_lock_nmse(const EmulatorRun& run, const TimeSeries& s, const CouplingSegment& seg) {
    const std::size_t len = seg.end - seg.start;
    const std::size_t first = seg.end - len / 3;
    if (seg.end > run.y.size() || seg.end > s.size() || seg.end - first < 2) return std::nullopt;
    const std::span<const double> y(run.y.values);
    const std::span<const double> t(s.values);
    return nmse(y.subspan(first, seg.end - first), t.subspan(first, seg.end - first));
}

}  // namespace chaosrc
