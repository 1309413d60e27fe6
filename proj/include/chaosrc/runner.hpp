#pragma once

// Declarative experiment configs, the pipelines behind each experiment kind,
// and the JSON run summary.

#include "chaosrc/crypto.hpp"
#include "chaosrc/dynamics.hpp"
#include "chaosrc/emulation.hpp"
#include "chaosrc/inverse_sync.hpp"
#include "chaosrc/signals.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chaosrc {

inline constexpr int kSummarySchemaVersion = 1;

enum class ExperimentKind {
    MgEmulate,
    LorenzEmulate,
    SyncForwardMg,
    SyncForwardLorenz,
    SyncInverseMg,
    SyncInverseLorenz,
    CryptoFm,
    CryptoBits
};

std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_kind(const std::string& s);
bool uses_lorenz(ExperimentKind k);

struct SeedSet {
    std::uint64_t topology = 0;
    std::uint64_t noise = 0;
};

/// Sample counts at the reservoir's sampling interval.
struct SplitSizes {
    std::size_t transient = 1000;
    std::size_t train = 3000;
    std::size_t test = 3000;
};

struct SystemSpec {
    MGParams mg;
    LorenzParams lorenz;
    double dt = 0.5;
    double history = 0.5;      // constant MG past
    Vec3 init{10.0, 0.0, 0.0};  // Lorenz start
    double scale = 1.0;        // applied to the sampled signal (0.01 for Lorenz)
};

/// Coupling on for t_on <= t < t_off (time measured from the end of
/// training), run length `duration`, one run per q.
struct ForwardSyncSpec {
    double t_on = 500.0;
    double t_off = 1500.0;
    double duration = 3000.0;
    std::vector<double> q_values{0.5, 0.25, 0.1, 0.001};
    std::size_t window = 100;
    double lock_threshold = 0.1;
    std::size_t desync_windows = 5;
};

struct InverseSyncSpec {
    double q = 0.25;
    double t_on = 500.0;
    double t_off = 1500.0;
    double duration = 3000.0;
    bool mix_delayed = true;
    std::size_t window = 100;
    std::size_t desync_windows = 5;
    double after_off = 10.0;  // time span after t_off for the release NMSE
};

enum class MessageKind { Fm, Bits };

struct CryptoSpec {
    CipherParams cipher;
    double carrier_transient = 1000.0;  // time units of undriven carrier before the message starts
    MessageKind message = MessageKind::Fm;
    FMMessageParams fm;
    BitMessageParams bits;
    std::size_t train_samples = 12000;  // at the cipher dt
    std::size_t test_samples = 40000;   // FM only
    std::size_t test_bits = 50;         // bits only; training bits cover train_samples
    std::uint64_t bits_seed = 1;
    std::optional<BandSpec> bob_filter;
    std::size_t washout = 100;
    double out_of_band_factor = 10.0;   // residual energy above factor * f_c
    std::size_t frequency_span = 5;     // zero crossings per frequency estimate
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::MgEmulate;
    std::string name;
    std::filesystem::path output_dir;
    SeedSet seeds;
    SystemSpec system;
    ReservoirConfig reservoir;
    SplitSizes split;
    std::size_t washout = 100;
    double autonomous_margin = 0.2;
    bool save_weights = false;
    ForwardSyncSpec forward;
    InverseSyncSpec inverse;
    CryptoSpec crypto;
    nlohmann::json source;  // the parsed document, echoed into the summary
};

struct Diagnostic {
    std::string field;
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

/// Parses and fully validates a config document; throws ConfigError listing
/// every problem (syntax errors carry line and column).
ExperimentConfig validate_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---- pipeline pieces -------------------------------------------------------

/// Sampled signal split into training samples and the samples that follow,
/// plus the system state where the latter begin.
struct EmulationData {
    TimeSeries train;
    TimeSeries future;             // t0 = 0 at the first post-training sample
    std::optional<DelayHistory> mg_history;  // MG past ending at the future start
    Vec3 lorenz_state{};           // Lorenz state at the future start
};

/// Integrates the system long enough for transient + train + max(test, future_samples).
EmulationData prepare_emulation_data(const ExperimentConfig& cfg, std::size_t future_samples);

TrainedEmulator train_for(const ExperimentConfig& cfg, const EmulationData& data);

struct AutonomousReport {
    EmulatorRun run;
    std::size_t steps_in_range = 0;  // leading steps inside the widened training range
    std::optional<double> nmse_first_window;
};

AutonomousReport autonomous_fidelity(const TrainedEmulator& e, const TimeSeries& future, std::size_t steps,
                                     double margin, std::size_t window = 100);

struct ForwardSyncResult {
    double q = 0.0;
    CouplingSegment segment;
    EmulatorRun run;
    std::optional<double> post_lock_nmse;
    bool locked = false;        // final windows of the coupled segment below the threshold
    std::optional<double> desync_ratio;  // max of the windows after release over post-lock NMSE
};

ForwardSyncResult forward_sync(const TrainedEmulator& e, const TimeSeries& future, const ForwardSyncSpec& spec,
                               double q);

/// Windows lying entirely inside [seg.start, seg.end) of a windowed trace.
NmseTrace windows_inside(const NmseTrace& trace, std::size_t window, std::size_t start, std::size_t end);

struct InverseSyncResult {
    TimeSeries rc;       // reservoir output, autonomous
    TimeSeries driven;   // driven system sampled like the reservoir, in reservoir units
    Vec3Series lorenz_trajectory;  // Lorenz only
    NmseTrace windowed_nmse;
    std::optional<double> locked_nmse;   // final third of the drive window
    std::optional<double> release_nmse;  // after_off span after t_off
    std::optional<double> desync_ratio;  // max window after t_off over locked NMSE
    std::optional<double> lobe_agreement;  // Lorenz only, over the locked window
    bool rc_diverged = false;
    std::string failure;  // set when the driven integration blew up
};

InverseSyncResult inverse_sync(const ExperimentConfig& cfg, const TrainedEmulator& e, const EmulationData& data);

struct CryptoResult {
    TimeSeries message;
    TimeSeries ciphertext;
    TimeSeries intercepted;
    TimeSeries bob_noiseless;
    TimeSeries bob_unfiltered;
    std::optional<TimeSeries> bob_filtered;
    TimeSeries eve;          // test segment
    TimeSeries message_test;
    std::optional<double> eve_training_nmse;
    std::optional<double> eve_test_nmse;
    std::optional<double> bob_noiseless_nmse;
    std::optional<double> bob_unfiltered_nmse;
    std::optional<double> bob_filtered_nmse;
    double snr = 0.0;
    // FM
    std::optional<double> frequency_correlation;
    std::optional<double> eve_out_of_band;
    std::optional<double> bob_out_of_band;
    FrequencyTrack eve_frequency;
    // bits
    Bits sent_bits;
    std::optional<DecodedBits> decoded;
    std::optional<double> ber;
};

CryptoResult run_crypto(const ExperimentConfig& cfg);

// ---- orchestration ---------------------------------------------------------

struct RunOptions {
    std::optional<std::filesystem::path> output_root;  // prefix for relative output dirs
};

/// Resolved output directory: output_root / cfg.output_dir when relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt);

/// Runs the pipeline for cfg.kind, writes artifacts and summary.json, and
/// returns the summary. Stage failures are rethrown as StageError.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "': " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace chaosrc
