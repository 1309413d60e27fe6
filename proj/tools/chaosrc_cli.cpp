#include "chaosrc/crypto.hpp"
#include "chaosrc/runner.hpp"
#include "chaosrc/signals.hpp"
#include "chaosrc/weights_io.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <iostream>

using namespace chaosrc;

namespace {

constexpr const char* kOutputRootEnv = "CHAOSRC_OUTPUT_ROOT";

struct RunArgs {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_root;
    int jobs = 1;
};

RunOptions run_options(const RunArgs& a) {
    RunOptions opt;
    if (a.output_root) {
        opt.output_root = *a.output_root;
    } else if (const char* env = std::getenv(kOutputRootEnv); env && *env) {
        opt.output_root = env;
    }
    return opt;
}

void print_diagnostics(const std::string& path, const ConfigError& e) {
    for (const auto& d : e.diagnostics()) {
        std::cerr << path << ": " << (d.field.empty() ? "<document>" : d.field) << ": " << d.message << '\n';
    }
}

int run_one(const std::string& path, const RunArgs& a) {
    try {
        ExperimentConfig cfg = load_config(path);
        if (a.seed_override) {
            cfg.seeds.topology = *a.seed_override;
            cfg.seeds.noise = *a.seed_override;
            cfg.reservoir.seed = *a.seed_override;
        }
        const auto summary = run_experiment(cfg, run_options(a));
        std::cout << path << ": " << summary["kind"].get<std::string>() << " done in "
                  << summary["wall_clock_seconds"].get<double>() << " s -> "
                  << resolve_output_dir(cfg, run_options(a)).string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        print_diagnostics(path, e);
        return 2;
    } catch (const StageError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 1;
    }
}

// Each config runs in its own child process; at most `jobs` at a time.
int run_all(const RunArgs& a) {
    if (a.jobs <= 1 || a.configs.size() == 1) {
        int status = 0;
        for (const auto& c : a.configs) status = std::max(status, run_one(c, a));
        return status;
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& c : a.configs) {
        try {
            dirs.push_back(std::filesystem::weakly_canonical(resolve_output_dir(load_config(c), run_options(a))));
        } catch (const ConfigError& e) {
            print_diagnostics(c, e);
            return 2;
        }
    }
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (dirs[i] == dirs[j]) {
                std::cerr << a.configs[i] << " and " << a.configs[j] << " share output directory " << dirs[i] << '\n';
                return 2;
            }
        }
    }
    std::cout.flush();
    int status = 0;
    std::size_t next = 0;
    int running = 0;
    while (next < a.configs.size() || running > 0) {
        if (next < a.configs.size() && running < a.jobs) {
            const pid_t pid = fork();
            if (pid < 0) throw std::runtime_error("fork failed");
            if (pid == 0) {
                const int rc = run_one(a.configs[next], a);
                std::cout.flush();
                std::_Exit(rc);
            }
            ++next;
            ++running;
            continue;
        }
        int ws = 0;
        if (wait(&ws) > 0) {
            --running;
            const int rc = WIFEXITED(ws) ? WEXITSTATUS(ws) : 1;
            status = std::max(status, rc);
        }
    }
    return status;
}

ReservoirConfig attacker_config(int nodes, double rho, double input_scale, double timescale, double leak,
                                double delta, std::uint64_t seed, double noise) {
    ReservoirConfig rc;
    rc.nodes = nodes;
    rc.spectral_radius = rho;
    rc.input_scale = input_scale;
    rc.feedback_scale = 0.0;
    rc.timescale = timescale;
    rc.leak = leak;
    rc.delta = delta;
    rc.seed = seed;
    rc.reg_noise_amplitude = noise;
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reservoir emulation, chaos synchronisation and delay-cipher attack experiments"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run experiment configs and write their artifacts");
    run->add_option("configs", run_args.configs, "Experiment config files (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed-override", run_args.seed_override, "Replace both topology and noise seeds");
    run->add_option("--output-root", run_args.output_root,
                    std::string("Prefix for relative output directories (default: $") + kOutputRootEnv + ")");
    run->add_option("--jobs,-j", run_args.jobs, "Configs to run in parallel processes")->check(CLI::PositiveNumber);

    std::vector<std::string> validate_paths;
    auto* validate = app.add_subcommand("validate", "Check configs without running them");
    validate->add_option("configs", validate_paths, "Experiment config files (JSON)")->required();

    // Message generation
    std::string msg_kind = "fm", msg_out, bits_out;
    double msg_dt = 0.5;
    std::size_t msg_steps = 52000, msg_bits = 57;
    std::uint64_t msg_seed = 1;
    FMMessageParams fm;
    BitMessageParams bp;
    auto* message = app.add_subcommand("message", "Write a plain-text message series");
    message->add_option("kind", msg_kind, "fm or bits")->check(CLI::IsMember({"fm", "bits"}));
    message->add_option("--out,-o", msg_out, "Output CSV")->required();
    message->add_option("--dt", msg_dt, "Sample interval")->check(CLI::PositiveNumber);
    message->add_option("--steps", msg_steps, "Samples (fm)");
    message->add_option("--bits", msg_bits, "Number of random bits (bits)");
    message->add_option("--seed", msg_seed, "Bit seed (bits)");
    message->add_option("--bits-out", bits_out, "Also write the bit sequence as CSV (bits)");
    message->add_option("--amplitude", fm.amplitude, "FM amplitude A");
    message->add_option("--carrier", fm.carrier, "FM carrier f_c");

    // Cipher stages
    std::string in_path, out_path, msg_path, weights_path;
    CipherParams cipher;
    double history = 0.5, transient = 1000.0;
    auto* encrypt = app.add_subcommand("encrypt", "Alice: hide a message in the delay dynamics");
    encrypt->add_option("--message,-m", msg_path, "Message CSV")->required()->check(CLI::ExistingFile);
    encrypt->add_option("--out,-o", out_path, "Ciphertext CSV")->required();
    encrypt->add_option("--epsilon", cipher.epsilon, "Inertia epsilon");
    encrypt->add_option("--history", history, "Constant carrier past before the transient");
    encrypt->add_option("--transient", transient, "Undriven carrier time before the message");

    double nu = 1e-3;
    std::uint64_t noise_seed = 1;
    auto* chan = app.add_subcommand("channel", "Add uniform transmission noise");
    chan->add_option("--in,-i", in_path, "Ciphertext CSV")->required()->check(CLI::ExistingFile);
    chan->add_option("--out,-o", out_path, "Received CSV")->required();
    chan->add_option("--nu", nu, "Noise half-width")->check(CLI::NonNegativeNumber);
    chan->add_option("--seed", noise_seed, "Noise seed");

    std::vector<double> band;
    auto* bob = app.add_subcommand("decrypt-bob", "Bob: open-loop replica decoding");
    bob->add_option("--in,-i", in_path, "Received CSV")->required()->check(CLI::ExistingFile);
    bob->add_option("--out,-o", out_path, "Recovered message CSV")->required();
    bob->add_option("--epsilon", cipher.epsilon, "Inertia epsilon");
    bob->add_option("--band", band, "Band-pass f_lo f_hi")->expected(2);

    int nodes = 250;
    double rho = 0.79, input_scale = 0.9, timescale = 0.05, leak = 0.9, delta = 0.5, reg_noise = 0.0;
    std::uint64_t topo_seed = 1;
    std::size_t washout = 100;
    auto* train = app.add_subcommand("attack-train", "Eve: train a reservoir on ciphertext/message pairs");
    train->add_option("--ciphertext,-c", in_path, "Received CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--message,-m", msg_path, "Message CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--out,-o", weights_path, "Weights file")->required();
    train->add_option("--nodes", nodes, "Reservoir size");
    train->add_option("--spectral-radius", rho, "Spectral radius of W");
    train->add_option("--input-scale", input_scale, "Input weight scale");
    train->add_option("--timescale", timescale, "Timescale C");
    train->add_option("--leak", leak, "Leak rate a");
    train->add_option("--delta", delta, "Sampling interval");
    train->add_option("--seed", topo_seed, "Topology seed");
    train->add_option("--reg-noise", reg_noise, "State noise half-width");
    train->add_option("--washout", washout, "Discarded initial steps");

    auto* decrypt = app.add_subcommand("attack-decrypt", "Eve: run a trained attacker over ciphertext");
    decrypt->add_option("--weights,-w", weights_path, "Weights file")->required()->check(CLI::ExistingFile);
    decrypt->add_option("--ciphertext,-c", in_path, "Received CSV")->required()->check(CLI::ExistingFile);
    decrypt->add_option("--out,-o", out_path, "Recovered message CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_all(run_args);
        if (*validate) {
            int status = 0;
            for (const auto& p : validate_paths) {
                try {
                    const auto cfg = load_config(p);
                    std::cout << p << ": ok (" << to_string(cfg.kind) << ")\n";
                } catch (const ConfigError& e) {
                    print_diagnostics(p, e);
                    status = 2;
                }
            }
            return status;
        }
        if (*message) {
            if (msg_kind == "fm") {
                write_csv(msg_out, fm_message(fm, msg_dt, msg_steps));
            } else {
                const Bits bits = random_bits(msg_bits, msg_seed);
                write_csv(msg_out, bit_message(bits, bp, msg_dt));
                if (!bits_out.empty()) {
                    std::vector<double> idx, val;
                    for (std::size_t i = 0; i < bits.size(); ++i) {
                        idx.push_back(static_cast<double>(i));
                        val.push_back(bits[i]);
                    }
                    const std::string header[] = {"bit", "value"};
                    const std::vector<double> cols[] = {idx, val};
                    write_table_csv(bits_out, header, cols);
                }
            }
            return 0;
        }
        if (*encrypt) {
            const TimeSeries m = read_time_series_csv(msg_path);
            cipher.dt = m.dt;
            MackeyGlassIntegrator carrier(cipher.mg, DelayHistory::constant(history), m.dt);
            carrier.advance(static_cast<std::size_t>(std::llround(transient / m.dt)));
            const DelayHistory snap = carrier.snapshot();
            const DelayHistory hist = DelayHistory::grid(m.t0, m.dt, snap.grid_values(), snap.grid_derivatives());
            write_csv(out_path, alice_encrypt(m, cipher, hist));
            return 0;
        }
        if (*chan) {
            write_csv(out_path, channel(read_time_series_csv(in_path), nu, noise_seed));
            return 0;
        }
        if (*bob) {
            const TimeSeries x = read_time_series_csv(in_path);
            cipher.dt = x.dt;
            std::optional<BandSpec> filter;
            if (band.size() == 2) filter = BandSpec{band[0], band[1]};
            write_csv(out_path, bob_decrypt(x, cipher, filter));
            return 0;
        }
        if (*train) {
            const ReservoirConfig rc =
                attacker_config(nodes, rho, input_scale, timescale, leak, delta, topo_seed, reg_noise);
            const TrainedAttacker att =
                eve_train(read_time_series_csv(in_path), read_time_series_csv(msg_path), rc, washout);
            save_weights(weights_path, att.weights, att.cfg);
            std::cout << "training NMSE " << format_double(att.training_nmse.value_or(NAN)) << '\n';
            return 0;
        }
        if (*decrypt) {
            StoredWeights stored = load_weights(weights_path);
            TrainedAttacker att;
            att.weights = std::move(stored.weights);
            att.cfg = stored.cfg;
            write_csv(out_path, eve_decrypt(att, read_time_series_csv(in_path)));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
