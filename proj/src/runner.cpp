#include "chaosrc/runner.hpp"

#include "chaosrc/analysis.hpp"
#include "chaosrc/weights_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace chaosrc {

using nlohmann::json;

namespace {

struct KindName {
    ExperimentKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::MgEmulate, "mg-emulate"},
    {ExperimentKind::LorenzEmulate, "lorenz-emulate"},
    {ExperimentKind::SyncForwardMg, "sync-forward-mg"},
    {ExperimentKind::SyncForwardLorenz, "sync-forward-lorenz"},
    {ExperimentKind::SyncInverseMg, "sync-inverse-mg"},
    {ExperimentKind::SyncInverseLorenz, "sync-inverse-lorenz"},
    {ExperimentKind::CryptoFm, "crypto-fm"},
    {ExperimentKind::CryptoBits, "crypto-bits"},
};

bool is_crypto(ExperimentKind k) { return k == ExperimentKind::CryptoFm || k == ExperimentKind::CryptoBits; }
bool is_forward(ExperimentKind k) {
    return k == ExperimentKind::SyncForwardMg || k == ExperimentKind::SyncForwardLorenz;
}
bool is_inverse(ExperimentKind k) {
    return k == ExperimentKind::SyncInverseMg || k == ExperimentKind::SyncInverseLorenz;
}

}  // namespace

std::string to_string(ExperimentKind k) {
    for (const auto& kn : kKindNames) {
        if (kn.kind == k) return kn.name;
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(const std::string& s) {
    for (const auto& kn : kKindNames) {
        if (s == kn.name) return kn.kind;
    }
    return std::nullopt;
}

bool uses_lorenz(ExperimentKind k) {
    return k == ExperimentKind::LorenzEmulate || k == ExperimentKind::SyncForwardLorenz ||
           k == ExperimentKind::SyncInverseLorenz;
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::string out = "invalid experiment config:";
    for (const auto& d : diags) out += "\n  " + (d.field.empty() ? std::string("<document>") : d.field) + ": " + d.message;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diagnostics(diags)), diags_(std::move(diags)) {}

// ---- config parsing --------------------------------------------------------

namespace {

// Defaults per kind; user fields are applied on top.
void apply_kind_defaults(ExperimentConfig& c) {
    const ExperimentKind k = c.kind;
    c.reservoir = ReservoirConfig{};
    c.reservoir.nodes = 1500;
    c.reservoir.reg_noise_amplitude = 1e-6;
    if (uses_lorenz(k)) {
        c.system.dt = 0.02;
        c.system.scale = 0.01;
        c.split = {1000, 6000, 3000};
        c.reservoir.spectral_radius = 0.97;
        c.reservoir.input_scale = 0.5;
        c.reservoir.feedback_scale = 0.5;
        c.reservoir.delta = 0.02;
        c.forward.t_on = 20.0;
        c.forward.t_off = 80.0;
        c.forward.duration = 100.0;
        c.forward.q_values = {0.5, 0.25, 0.1, 0.05};
        c.inverse.t_on = 20.0;
        c.inverse.t_off = 40.0;
        c.inverse.duration = 60.0;
    } else {
        c.system.dt = 0.5;
        c.split = {1000, 3000, 3000};
        c.reservoir.spectral_radius = 0.79;
        c.reservoir.delta = 1.0;
    }
    if (is_crypto(k)) {
        c.reservoir.nodes = 250;
        c.reservoir.spectral_radius = 0.79;
        c.reservoir.feedback_scale = 0.0;
        c.reservoir.reg_noise_amplitude = 0.0;
        c.reservoir.leak = 0.9;
        auto& cr = c.crypto;
        cr.cipher.epsilon = 1.0 / c.system.mg.gamma;
        if (k == ExperimentKind::CryptoFm) {
            cr.message = MessageKind::Fm;
            cr.cipher.dt = 0.5;
            cr.cipher.nu = 1e-3;
            cr.train_samples = 12000;
            cr.test_samples = 40000;
            cr.bob_filter = BandSpec{cr.fm.carrier / 4.0, cr.fm.carrier * 4.0};
            c.reservoir.input_scale = 0.9;
            c.reservoir.timescale = 0.05;
            c.reservoir.delta = 0.5;
        } else {
            cr.message = MessageKind::Bits;
            cr.cipher.dt = 0.1;
            cr.cipher.nu = 2e-3;
            cr.train_samples = 7000;
            cr.test_bits = 50;
            c.reservoir.input_scale = 1.0;
            c.reservoir.timescale = 0.22;
            c.reservoir.delta = 0.1;
        }
    }
}

class Parser {
public:
    explicit Parser(std::vector<Diagnostic>& diags) : diags_(diags) {}

    void error(const std::string& field, const std::string& message) { diags_.push_back({field, message}); }

    // Object with a fixed key set; reports unknown keys and returns nullptr
    // when the node is not an object.
    const json* object(const json& parent, const std::string& key, const std::string& path,
                       std::initializer_list<const char*> allowed, bool required = false) {
        const std::string field = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(field, "missing required section");
            return nullptr;
        }
        const json& node = parent.at(key);
        if (!node.is_object()) {
            error(field, "expected an object");
            return nullptr;
        }
        check_keys(node, field, allowed);
        return &node;
    }

    void check_keys(const json& node, const std::string& path, std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : node.items()) {
            const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
            if (!known) error(join(path, key), "unknown key");
        }
    }

    template <typename T>
    bool get(const json* node, const char* key, const std::string& path, T& out, bool required = false) {
        if (node == nullptr) {
            if (required) error(join(path, key), "missing required field");
            return false;
        }
        if (!node->contains(key)) {
            if (required) error(join(path, key), "missing required field");
            return false;
        }
        const json& v = node->at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
                if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
                    throw std::invalid_argument("expected a non-negative integer");
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::invalid_argument("expected a string");
            }
            out = v.get<T>();
            return true;
        } catch (const std::exception& e) {
            error(join(path, key), e.what());
            return false;
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    std::vector<Diagnostic>& diags_;
};

void require(Parser& p, bool ok, const std::string& field, const std::string& message) {
    if (!ok) p.error(field, message);
}

void parse_system(Parser& p, const json& doc, ExperimentConfig& c) {
    const bool lorenz = uses_lorenz(c.kind);
    const json* sys = lorenz ? p.object(doc, "system", "", {"sigma", "r", "b", "dt", "init", "scale"})
                             : p.object(doc, "system", "", {"beta", "gamma", "tau", "n", "dt", "history"});
    auto& s = c.system;
    if (lorenz) {
        p.get(sys, "sigma", "system", s.lorenz.sigma);
        p.get(sys, "r", "system", s.lorenz.r);
        p.get(sys, "b", "system", s.lorenz.b);
        p.get(sys, "scale", "system", s.scale);
        if (sys && sys->contains("init")) {
            const json& init = sys->at("init");
            if (!init.is_array() || init.size() != 3 || !std::all_of(init.begin(), init.end(), [](const json& v) {
                    return v.is_number();
                })) {
                p.error("system.init", "expected an array of three numbers");
            } else {
                for (std::size_t i = 0; i < 3; ++i) s.init[i] = init[i].get<double>();
            }
        }
        require(p, s.lorenz.sigma > 0 && s.lorenz.r > 0 && s.lorenz.b > 0, "system", "sigma, r and b must be positive");
        require(p, s.scale != 0.0 && std::isfinite(s.scale), "system.scale", "must be finite and non-zero");
    } else {
        p.get(sys, "beta", "system", s.mg.beta);
        p.get(sys, "gamma", "system", s.mg.gamma);
        p.get(sys, "tau", "system", s.mg.tau);
        p.get(sys, "n", "system", s.mg.n_exp);
        p.get(sys, "history", "system", s.history);
        require(p, s.mg.beta > 0 && s.mg.gamma > 0 && s.mg.tau > 0 && s.mg.n_exp > 0, "system",
                "beta, gamma, tau and n must be positive");
    }
    p.get(sys, "dt", "system", s.dt);
    require(p, s.dt > 0.0, "system.dt", "must be positive");
}

void parse_reservoir(Parser& p, const json& doc, ExperimentConfig& c) {
    const json* r = p.object(doc, "reservoir", "",
                             {"nodes", "timescale", "leak", "spectral_radius", "input_scale", "feedback_scale",
                              "input_bias", "delta", "reg_noise_amplitude"});
    auto& rc = c.reservoir;
    p.get(r, "nodes", "reservoir", rc.nodes);
    p.get(r, "timescale", "reservoir", rc.timescale);
    p.get(r, "leak", "reservoir", rc.leak);
    p.get(r, "spectral_radius", "reservoir", rc.spectral_radius);
    p.get(r, "input_scale", "reservoir", rc.input_scale);
    p.get(r, "feedback_scale", "reservoir", rc.feedback_scale);
    p.get(r, "input_bias", "reservoir", rc.input_bias);
    p.get(r, "delta", "reservoir", rc.delta);
    p.get(r, "reg_noise_amplitude", "reservoir", rc.reg_noise_amplitude);
    rc.seed = c.seeds.topology;
    try {
        rc.validate();
    } catch (const std::invalid_argument& e) {
        p.error("reservoir", e.what());
    }
    if (is_crypto(c.kind)) {
        require(p, rc.feedback_scale == 0.0, "reservoir.feedback_scale", "the attacker must have feedback off (0)");
    }
}

bool whole_multiple(double a, double b) {
    const double r = a / b;
    return r >= 1.0 - 1e-9 && std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

void parse_forward(Parser& p, const json& doc, ExperimentConfig& c) {
    const json* f = p.object(doc, "forward", "",
                             {"t_on", "t_off", "duration", "q", "window", "lock_threshold", "desync_windows"});
    auto& fw = c.forward;
    p.get(f, "t_on", "forward", fw.t_on);
    p.get(f, "t_off", "forward", fw.t_off);
    p.get(f, "duration", "forward", fw.duration);
    p.get(f, "window", "forward", fw.window);
    p.get(f, "lock_threshold", "forward", fw.lock_threshold);
    p.get(f, "desync_windows", "forward", fw.desync_windows);
    if (f && f->contains("q")) {
        const json& q = f->at("q");
        if (!q.is_array() || q.empty()) {
            p.error("forward.q", "expected a non-empty array of couplings");
        } else {
            fw.q_values.clear();
            for (std::size_t i = 0; i < q.size(); ++i) {
                const std::string field = "forward.q[" + std::to_string(i) + "]";
                if (!q[i].is_number()) {
                    p.error(field, "expected a number");
                    continue;
                }
                const double v = q[i].get<double>();
                if (!(v >= 0.0 && v <= 1.0)) p.error(field, "coupling " + format_double(v) + " outside [0, 1]");
                fw.q_values.push_back(v);
            }
        }
    }
    require(p, fw.t_on >= 0.0 && fw.t_off > fw.t_on, "forward", "need 0 <= t_on < t_off");
    require(p, fw.duration >= fw.t_off, "forward.duration", "must cover t_off");
    require(p, fw.window >= 2, "forward.window", "must be at least 2");
    require(p, fw.lock_threshold > 0.0, "forward.lock_threshold", "must be positive");
}

void parse_inverse(Parser& p, const json& doc, ExperimentConfig& c) {
    const json* f = p.object(doc, "inverse", "",
                             {"q", "t_on", "t_off", "duration", "mix_delayed", "window", "desync_windows", "after_off"});
    auto& iv = c.inverse;
    p.get(f, "q", "inverse", iv.q);
    p.get(f, "t_on", "inverse", iv.t_on);
    p.get(f, "t_off", "inverse", iv.t_off);
    p.get(f, "duration", "inverse", iv.duration);
    p.get(f, "mix_delayed", "inverse", iv.mix_delayed);
    p.get(f, "window", "inverse", iv.window);
    p.get(f, "desync_windows", "inverse", iv.desync_windows);
    p.get(f, "after_off", "inverse", iv.after_off);
    require(p, iv.q >= 0.0 && iv.q <= 1.0, "inverse.q", "coupling " + format_double(iv.q) + " outside [0, 1]");
    require(p, iv.t_on >= 0.0 && iv.t_off > iv.t_on, "inverse", "need 0 <= t_on < t_off");
    require(p, iv.duration >= iv.t_off + iv.after_off, "inverse.duration", "must cover t_off + after_off");
    require(p, iv.window >= 2, "inverse.window", "must be at least 2");
    require(p, iv.after_off > 0.0, "inverse.after_off", "must be positive");
}

void parse_crypto(Parser& p, const json& doc, ExperimentConfig& c) {
    const bool fm = c.kind == ExperimentKind::CryptoFm;
    const json* cr = fm ? p.object(doc, "crypto", "",
                                   {"epsilon", "nu", "dt", "carrier_transient", "train_samples", "test_samples",
                                    "washout", "out_of_band_factor", "frequency_span", "message", "bob_filter"})
                        : p.object(doc, "crypto", "",
                                   {"epsilon", "nu", "dt", "carrier_transient", "train_samples", "test_bits",
                                    "bits_seed", "washout", "message", "bob_filter"});
    auto& s = c.crypto;
    s.cipher.mg = c.system.mg;
    p.get(cr, "epsilon", "crypto", s.cipher.epsilon);
    p.get(cr, "nu", "crypto", s.cipher.nu);
    p.get(cr, "dt", "crypto", s.cipher.dt);
    p.get(cr, "carrier_transient", "crypto", s.carrier_transient);
    p.get(cr, "train_samples", "crypto", s.train_samples);
    p.get(cr, "washout", "crypto", s.washout);
    if (fm) {
        p.get(cr, "test_samples", "crypto", s.test_samples);
        p.get(cr, "out_of_band_factor", "crypto", s.out_of_band_factor);
        p.get(cr, "frequency_span", "crypto", s.frequency_span);
        const json* m = cr ? p.object(*cr, "message", "crypto", {"amplitude", "carrier", "index", "modulation"})
                           : nullptr;
        p.get(m, "amplitude", "crypto.message", s.fm.amplitude);
        p.get(m, "carrier", "crypto.message", s.fm.carrier);
        p.get(m, "index", "crypto.message", s.fm.index);
        p.get(m, "modulation", "crypto.message", s.fm.modulation);
        try {
            s.fm.validate();
        } catch (const std::invalid_argument& e) {
            p.error("crypto.message", e.what());
        }
        if (s.fm.carrier > 0.0) s.bob_filter = BandSpec{s.fm.carrier / 4.0, s.fm.carrier * 4.0};
        require(p, s.test_samples >= 2, "crypto.test_samples", "must be at least 2");
        require(p, s.frequency_span >= 1, "crypto.frequency_span", "must be at least 1");
    } else {
        p.get(cr, "test_bits", "crypto", s.test_bits);
        p.get(cr, "bits_seed", "crypto", s.bits_seed);
        const json* m = cr ? p.object(*cr, "message", "crypto", {"amplitude", "omega0", "omega1", "slot_durations"})
                           : nullptr;
        p.get(m, "amplitude", "crypto.message", s.bits.amplitude);
        p.get(m, "omega0", "crypto.message", s.bits.omega0);
        p.get(m, "omega1", "crypto.message", s.bits.omega1);
        if (m && m->contains("slot_durations")) {
            const json& d = m->at("slot_durations");
            if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
                p.error("crypto.message.slot_durations", "expected two numbers");
            } else {
                s.bits.slot_durations = std::array<double, 2>{d[0].get<double>(), d[1].get<double>()};
                require(p, d[0].get<double>() == d[1].get<double>(), "crypto.message.slot_durations",
                        "the decoder needs equal slot durations");
            }
        }
        try {
            s.bits.validate();
        } catch (const std::invalid_argument& e) {
            p.error("crypto.message", e.what());
        }
        require(p, s.test_bits >= 1, "crypto.test_bits", "must be at least 1");
        if (s.cipher.dt > 0.0 && s.bits.omega0 > 0.0) {
            const double T = s.bits.slot_duration(0);
            require(p, whole_multiple(static_cast<double>(s.train_samples) * s.cipher.dt, T),
                    "crypto.train_samples", "training span must be a whole number of bit slots");
        }
    }
    if (cr && cr->contains("bob_filter")) {
        const json& f = cr->at("bob_filter");
        if (f.is_null()) {
            s.bob_filter.reset();
        } else if (!f.is_object()) {
            p.error("crypto.bob_filter", "expected an object or null");
        } else {
            p.check_keys(f, "crypto.bob_filter", {"f_lo", "f_hi"});
            BandSpec b;
            p.get(&f, "f_lo", "crypto.bob_filter", b.f_lo, true);
            p.get(&f, "f_hi", "crypto.bob_filter", b.f_hi, true);
            require(p, b.f_lo > 0.0 && b.f_hi > b.f_lo, "crypto.bob_filter", "need 0 < f_lo < f_hi");
            s.bob_filter = b;
        }
    }
    try {
        s.cipher.validate();
    } catch (const std::invalid_argument& e) {
        p.error("crypto", e.what());
    }
    require(p, s.carrier_transient >= 0.0, "crypto.carrier_transient", "must be non-negative");
    if (s.cipher.dt > 0.0) {
        require(p, whole_multiple(s.cipher.mg.tau, s.cipher.dt), "crypto.dt", "tau must be a whole number of steps");
        require(p, whole_multiple(c.reservoir.delta, s.cipher.dt), "reservoir.delta",
                "must be a whole multiple of crypto.dt");
    }
    require(p, s.train_samples > s.washout + 1, "crypto.train_samples", "must exceed the washout");
}

}  // namespace

ExperimentConfig validate_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "line L, column C" in its message.
        throw ConfigError(std::vector<Diagnostic>{{"", std::string("syntax error: ") + e.what()}});
    }
    std::vector<Diagnostic> diags;
    Parser p(diags);
    if (!doc.is_object()) throw ConfigError(std::vector<Diagnostic>{{"", "top level must be an object"}});
    p.check_keys(doc, "",
                 {"kind", "name", "output_dir", "seeds", "system", "reservoir", "split", "washout",
                  "autonomous_margin", "save_weights", "forward", "inverse", "crypto"});

    ExperimentConfig c;
    std::string kind;
    if (p.get(&doc, "kind", "", kind, true)) {
        const auto k = parse_kind(kind);
        if (!k) {
            p.error("kind", "unknown experiment kind '" + kind + "'");
            throw ConfigError(diags);
        }
        c.kind = *k;
    } else {
        throw ConfigError(diags);
    }
    apply_kind_defaults(c);
    c.source = doc;

    p.get(&doc, "name", "", c.name);
    std::string out;
    if (p.get(&doc, "output_dir", "", out, true)) {
        c.output_dir = out;
        require(p, !out.empty(), "output_dir", "must not be empty");
    }
    const json* seeds = p.object(doc, "seeds", "", {"topology", "noise"}, true);
    p.get(seeds, "topology", "seeds", c.seeds.topology, seeds != nullptr);
    p.get(seeds, "noise", "seeds", c.seeds.noise, seeds != nullptr);

    parse_system(p, doc, c);
    parse_reservoir(p, doc, c);

    const bool emulation = !is_crypto(c.kind);
    if (emulation) {
        const json* sp = p.object(doc, "split", "", {"transient", "train", "test"});
        p.get(sp, "transient", "split", c.split.transient);
        p.get(sp, "train", "split", c.split.train);
        p.get(sp, "test", "split", c.split.test);
        p.get(&doc, "washout", "", c.washout);
        p.get(&doc, "autonomous_margin", "", c.autonomous_margin);
        p.get(&doc, "save_weights", "", c.save_weights);
        require(p, c.split.train > c.washout + 1, "split.train", "must exceed the washout");
        require(p, c.split.test >= 2, "split.test", "must be at least 2");
        require(p, c.autonomous_margin >= 0.0, "autonomous_margin", "must be non-negative");
        if (c.system.dt > 0.0 && c.reservoir.delta > 0.0) {
            require(p, whole_multiple(c.reservoir.delta, c.system.dt), "reservoir.delta",
                    "must be a whole multiple of system.dt (delta/dt = " + format_double(c.reservoir.delta / c.system.dt) +
                        ")");
        }
        if (!uses_lorenz(c.kind) && c.system.dt > 0.0) {
            require(p, c.system.mg.tau >= c.system.dt, "system.tau", "must be at least one integration step");
        }
    } else {
        for (const char* key : {"split", "washout", "autonomous_margin", "save_weights"}) {
            if (doc.contains(key)) p.error(key, "not used by " + to_string(c.kind));
        }
    }

    if (is_forward(c.kind)) {
        parse_forward(p, doc, c);
    } else if (doc.contains("forward")) {
        p.error("forward", "section not used by " + to_string(c.kind));
    }
    if (is_inverse(c.kind)) {
        parse_inverse(p, doc, c);
    } else if (doc.contains("inverse")) {
        p.error("inverse", "section not used by " + to_string(c.kind));
    }
    if (is_crypto(c.kind)) {
        parse_crypto(p, doc, c);
    } else if (doc.contains("crypto")) {
        p.error("crypto", "section not used by " + to_string(c.kind));
    }

    if (!diags.empty()) throw ConfigError(diags);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::vector<Diagnostic>{{"", "cannot open " + path.string()}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return validate_config(buf.str());
}

// ---- pipelines -------------------------------------------------------------

namespace {

std::size_t ratio_steps(double delta, double dt) { return static_cast<std::size_t>(std::llround(delta / dt)); }
std::size_t time_to_samples(double t, double delta) { return static_cast<std::size_t>(std::llround(t / delta)); }

std::size_t future_samples_needed(const ExperimentConfig& cfg) {
    const double delta = cfg.reservoir.delta;
    std::size_t n = cfg.split.test;
    if (is_forward(cfg.kind)) n = std::max(n, time_to_samples(cfg.forward.duration, delta));
    if (is_inverse(cfg.kind)) n = std::max(n, time_to_samples(cfg.inverse.duration, delta));
    return n;
}

}  // namespace

EmulationData prepare_emulation_data(const ExperimentConfig& cfg, std::size_t future_samples) {
    const auto& s = cfg.system;
    const double delta = cfg.reservoir.delta;
    const std::size_t k = ratio_steps(delta, s.dt);
    const std::size_t head = cfg.split.transient + cfg.split.train;
    const std::size_t total = head + std::max(cfg.split.test, future_samples);

    EmulationData data;
    TimeSeries raw{s.dt, 0.0, {}};
    if (uses_lorenz(cfg.kind)) {
        const Vec3Series traj = integrate_lorenz(s.lorenz, s.init, s.dt, (total - 1) * k);
        data.lorenz_state = traj.values[head * k];
        raw = traj.component(0);
    } else {
        MackeyGlassIntegrator it(s.mg, DelayHistory::constant(s.history), s.dt);
        raw.values.push_back(it.value());
        auto first = it.advance(head * k);
        raw.values.insert(raw.values.end(), first.begin(), first.end());
        const DelayHistory snap = it.snapshot();
        data.mg_history = DelayHistory::grid(0.0, s.dt, snap.grid_values(), snap.grid_derivatives());
        auto rest = it.advance((total - 1) * k - head * k);
        raw.values.insert(raw.values.end(), rest.begin(), rest.end());
    }
    const TimeSeries sampled = resample(raw, delta, s.scale);
    data.train = sampled.slice(cfg.split.transient, cfg.split.train);
    data.future = sampled.slice(head, total - head);
    data.future.t0 = 0.0;
    return data;
}

TrainedEmulator train_for(const ExperimentConfig& cfg, const EmulationData& data) {
    ReservoirConfig rc = cfg.reservoir;
    rc.seed = cfg.seeds.topology;
    EmulationOptions opt;
    opt.noise_seed = cfg.seeds.noise;
    return train_emulator(data.train, rc, cfg.washout, opt);
}

AutonomousReport autonomous_fidelity(const TrainedEmulator& e, const TimeSeries& future, std::size_t steps,
                                     double margin, std::size_t window) {
    AutonomousReport rep;
    rep.run = autonomous_run(e, steps, e.final_training_state);
    const double span = e.target_max - e.target_min;
    const double lo = e.target_min - margin * span;
    const double hi = e.target_max + margin * span;
    for (double y : rep.run.y.values) {
        if (y < lo || y > hi) break;
        ++rep.steps_in_range;
    }
    if (rep.run.y.size() >= window && future.size() >= window && window >= 2) {
        rep.nmse_first_window = nmse(std::span<const double>(rep.run.y.values).first(window),
                                     std::span<const double>(future.values).first(window));
    }
    return rep;
}

NmseTrace windows_inside(const NmseTrace& trace, std::size_t window, std::size_t start, std::size_t end) {
    NmseTrace out;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (k * window >= start && (k + 1) * window <= end) out.push_back(trace[k]);
    }
    return out;
}

namespace {

std::optional<double> max_over(const NmseTrace& trace, std::size_t first, std::size_t count) {
    std::optional<double> best;
    for (std::size_t k = first; k < std::min(trace.size(), first + count); ++k) {
        if (trace[k] && (!best || *trace[k] > *best)) best = trace[k];
    }
    return best;
}

}  // namespace

ForwardSyncResult forward_sync(const TrainedEmulator& e, const TimeSeries& future, const ForwardSyncSpec& spec,
                               double q) {
    const double delta = e.cfg.delta;
    const std::size_t n = time_to_samples(spec.duration, delta);
    if (future.size() < n) throw std::invalid_argument("forward_sync: reference series shorter than the run");
    ForwardSyncResult r;
    r.q = q;
    r.segment = {time_to_samples(spec.t_on, delta), time_to_samples(spec.t_off, delta), q};
    const TimeSeries truth = future.slice(0, n);
    const CouplingSchedule sched({r.segment});
    r.run = coupled_run(e, truth, sched, e.final_training_state, spec.window);
    if (r.run.diverged) return r;
    r.post_lock_nmse = post_lock_nmse(r.run, truth, r.segment);
    r.locked = holds_below(windows_inside(r.run.windowed_nmse, spec.window, r.segment.start, r.segment.end),
                     spec.lock_threshold);
    const auto after = max_over(r.run.windowed_nmse, (r.segment.end + spec.window - 1) / spec.window,
                                spec.desync_windows);
    if (after && r.post_lock_nmse && *r.post_lock_nmse > 0.0) r.desync_ratio = *after / *r.post_lock_nmse;
    return r;
}

InverseSyncResult inverse_sync(const ExperimentConfig& cfg, const TrainedEmulator& e, const EmulationData& data) {
    const auto& spec = cfg.inverse;
    const auto& s = cfg.system;
    const double delta = cfg.reservoir.delta;
    const std::size_t n = time_to_samples(spec.duration, delta);
    const std::size_t k = ratio_steps(delta, s.dt);

    InverseSyncResult r;
    const EmulatorRun run = autonomous_run(e, n, e.final_training_state);
    r.rc = run.y;
    r.rc.t0 = 0.0;
    r.rc.dt = delta;
    if (run.diverged) {
        r.rc_diverged = true;
        r.failure = "reservoir output diverged at step " + std::to_string(run.diverged_at);
        return r;
    }
    const DriveWindow window{spec.q, spec.t_on, spec.t_off};
    try {
        if (uses_lorenz(cfg.kind)) {
            r.lorenz_trajectory =
                lorenz_driven_by_rc(s.lorenz, r.rc, window, data.lorenz_state, s.dt, (n - 1) * k, 0.0, 1.0 / s.scale);
            r.driven = resample(r.lorenz_trajectory.component(0), delta, s.scale);
        } else {
            const TimeSeries x = mg_driven_by_rc(s.mg, r.rc, window, *data.mg_history, s.dt, (n - 1) * k, 0.0,
                                                 spec.mix_delayed ? MgMixScope::MixedHistory
                                                                  : MgMixScope::InstantaneousOnly);
            r.driven = resample(x, delta, s.scale);
        }
    } catch (const IntegrationError& err) {
        r.failure = err.what();
        return r;
    }

    const std::span<const double> yd(r.driven.values);
    const std::span<const double> yr(r.rc.values);
    r.windowed_nmse = windowed_nmse(yd, yr, spec.window);
    const std::size_t on = time_to_samples(spec.t_on, delta);
    const std::size_t off = time_to_samples(spec.t_off, delta);
    const std::size_t lock_first = off - (off - on) / 3;
    r.locked_nmse = nmse(yd.subspan(lock_first, off - lock_first), yr.subspan(lock_first, off - lock_first));
    const std::size_t after = std::min(time_to_samples(spec.after_off, delta), n - off);
    if (after >= 2) r.release_nmse = nmse(yd.subspan(off, after), yr.subspan(off, after));
    const auto worst = max_over(r.windowed_nmse, (off + spec.window - 1) / spec.window, spec.desync_windows);
    if (worst && r.locked_nmse && *r.locked_nmse > 0.0) r.desync_ratio = *worst / *r.locked_nmse;
    if (uses_lorenz(cfg.kind)) {
        r.lobe_agreement = sign_agreement(yd.subspan(lock_first, off - lock_first), yr.subspan(lock_first, off - lock_first));
    }
    return r;
}

CryptoResult run_crypto(const ExperimentConfig& cfg) {
    const CryptoSpec& spec = cfg.crypto;
    CipherParams cp = spec.cipher;
    cp.mg = cfg.system.mg;
    const double dt = cp.dt;
    CryptoResult r;

    MackeyGlassIntegrator carrier(cp.mg, DelayHistory::constant(cfg.system.history), dt);
    carrier.advance(time_to_samples(spec.carrier_transient, dt));
    const DelayHistory snap = carrier.snapshot();
    const DelayHistory hist = DelayHistory::grid(0.0, dt, snap.grid_values(), snap.grid_derivatives());

    std::size_t train = spec.train_samples;
    if (spec.message == MessageKind::Fm) {
        r.message = fm_message(spec.fm, dt, spec.train_samples + spec.test_samples);
    } else {
        const double T = spec.bits.slot_duration(0);
        const auto train_bits = static_cast<std::size_t>(std::llround(static_cast<double>(train) * dt / T));
        r.sent_bits = random_bits(train_bits + spec.test_bits, spec.bits_seed);
        r.message = bit_message(r.sent_bits, spec.bits, dt);
        r.sent_bits.erase(r.sent_bits.begin(), r.sent_bits.begin() + static_cast<std::ptrdiff_t>(train_bits));
    }
    r.ciphertext = alice_encrypt(r.message, cp, hist);
    r.intercepted = channel(r.ciphertext, cp.nu, cfg.seeds.noise);
    r.snr = power_snr(r.ciphertext, r.intercepted);

    const std::size_t total = r.message.size();
    const std::size_t test = total - train;
    const std::size_t lag = static_cast<std::size_t>(std::llround(cp.mg.tau / dt));
    if (train < lag) throw std::invalid_argument("run_crypto: training span shorter than the delay");
    r.bob_noiseless = bob_decrypt(r.ciphertext, cp);
    r.bob_unfiltered = bob_decrypt(r.intercepted, cp);
    if (spec.bob_filter) r.bob_filtered = bob_decrypt(r.intercepted, cp, spec.bob_filter);

    // Bob's output starts one delay after the ciphertext; compare on the test span.
    const std::span<const double> m_test = std::span<const double>(r.message.values).subspan(train, test);
    auto bob_test = [&](const TimeSeries& b) { return std::span<const double>(b.values).subspan(train - lag, test); };
    r.bob_noiseless_nmse = nmse(bob_test(r.bob_noiseless), m_test);
    r.bob_unfiltered_nmse = nmse(bob_test(r.bob_unfiltered), m_test);
    if (r.bob_filtered) r.bob_filtered_nmse = nmse(bob_test(*r.bob_filtered), m_test);

    ReservoirConfig rc = cfg.reservoir;
    rc.seed = cfg.seeds.topology;
    const TrainedAttacker att = eve_train(r.intercepted.slice(0, train), r.message.slice(0, train), rc, spec.washout);
    r.eve_training_nmse = att.training_nmse;
    r.eve = eve_decrypt(att, r.intercepted.slice(train, test), att.final_state);
    r.message_test = resample(r.message.slice(train, test), rc.delta);
    r.eve_test_nmse = nmse(r.eve.values, r.message_test.values);

    if (spec.message == MessageKind::Fm) {
        r.eve_frequency = zero_crossing_frequency(r.eve, spec.frequency_span);
        if (r.eve_frequency.time.size() >= 2) {
            std::vector<double> law;
            for (double t : r.eve_frequency.time) law.push_back(spec.fm.instantaneous_frequency(t));
            r.frequency_correlation = pearson_correlation(r.eve_frequency.frequency, law);
        }
        const double cutoff = spec.out_of_band_factor * spec.fm.carrier;
        TimeSeries eve_res = r.eve;
        for (std::size_t i = 0; i < eve_res.size(); ++i) eve_res.values[i] -= r.message_test.values[i];
        TimeSeries bob_res{dt, r.message.time_at(train), {}};
        const auto b = bob_test(r.bob_unfiltered);
        for (std::size_t i = 0; i < test; ++i) bob_res.values.push_back(b[i] - m_test[i]);
        const TimeSeries bob_res_sampled = resample(bob_res, rc.delta);
        r.eve_out_of_band = band_energy(power_spectrum(eve_res), cutoff, INFINITY) / static_cast<double>(eve_res.size());
        r.bob_out_of_band =
            band_energy(power_spectrum(bob_res_sampled), cutoff, INFINITY) / static_cast<double>(bob_res_sampled.size());
    } else {
        r.decoded = decode_bits(r.eve, spec.bits, spec.test_bits);
        r.ber = bit_error_rate(r.decoded->bits, r.sent_bits);
    }
    return r;
}

// ---- orchestration ---------------------------------------------------------

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (cfg.output_dir.is_absolute() || !opt.output_root) return cfg.output_dir;
    return *opt.output_root / cfg.output_dir;
}

namespace {

json opt_json(const std::optional<double>& v) { return (v && std::isfinite(*v)) ? json(*v) : json(nullptr); }

std::string q_label(double q) { return format_double(q); }

class Artifacts {
public:
    explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    std::filesystem::path add(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

std::vector<double> index_column(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    return v;
}

std::vector<double> time_column(const TimeSeries& ts) {
    std::vector<double> v(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) v[i] = ts.time_at(i);
    return v;
}

std::vector<double> trace_column(const NmseTrace& t) {
    std::vector<double> v;
    for (const auto& x : t) v.push_back(x ? *x : NAN);
    return v;
}

void write_trace(Artifacts& art, const std::string& stem, const NmseTrace& trace, std::size_t window, double delta) {
    std::vector<double> start;
    for (std::size_t k = 0; k < trace.size(); ++k) start.push_back(static_cast<double>(k * window) * delta);
    const std::string header[] = {"window", "t_start", "nmse"};
    const std::vector<double> cols[] = {index_column(trace.size()), start, trace_column(trace)};
    write_table_csv(art.add(stem + ".csv"), header, cols);
    const PlotTrace plot[] = {{"windowed NMSE", start, trace_column(trace)}};
    write_svg_plot(art.add(stem + ".svg"), stem, plot, true);
}

json emulation_metrics(const TrainedEmulator& e) {
    return {{"training_nmse", opt_json(e.training_nmse)},
            {"readout_rank", e.readout_rank},
            {"target_min", e.target_min},
            {"target_max", e.target_max}};
}

void write_emulation_common(Artifacts& art, const ExperimentConfig& cfg, const EmulationData& data,
                            const TrainedEmulator& e) {
    write_csv(art.add("train.csv"), data.train);
    if (cfg.save_weights) save_weights(art.add("weights.bin"), e.weights, e.cfg);
}

json run_emulate(const ExperimentConfig& cfg, Artifacts& art) {
    EmulationData data;
    try {
        data = prepare_emulation_data(cfg, cfg.split.test);
    } catch (const std::exception& ex) {
        throw StageError("integrate", ex.what());
    }
    TrainedEmulator e;
    try {
        e = train_for(cfg, data);
    } catch (const std::exception& ex) {
        throw StageError("train", ex.what());
    }
    write_emulation_common(art, cfg, data, e);
    const AutonomousReport rep = autonomous_fidelity(e, data.future, cfg.split.test, cfg.autonomous_margin);

    const TimeSeries truth = data.future.slice(0, cfg.split.test);
    std::vector<double> y = rep.run.y.values;
    y.resize(truth.size(), NAN);
    const std::string header[] = {"step", "t", "y", "s"};
    const std::vector<double> cols[] = {index_column(truth.size()), time_column(truth), y, truth.values};
    write_table_csv(art.add("autonomous.csv"), header, cols);
    const PlotTrace plot[] = {{"reservoir", time_column(truth), y}, {"system", time_column(truth), truth.values}};
    write_svg_plot(art.add("autonomous.svg"), "autonomous run", plot);

    json m = emulation_metrics(e);
    m["autonomous"] = {{"steps", cfg.split.test},
                       {"steps_in_range", rep.steps_in_range},
                       {"margin", cfg.autonomous_margin},
                       {"diverged", rep.run.diverged},
                       {"nmse_first_window", opt_json(rep.nmse_first_window)}};
    return m;
}

json run_forward(const ExperimentConfig& cfg, Artifacts& art) {
    EmulationData data;
    try {
        data = prepare_emulation_data(cfg, future_samples_needed(cfg));
    } catch (const std::exception& ex) {
        throw StageError("integrate", ex.what());
    }
    TrainedEmulator e;
    try {
        e = train_for(cfg, data);
    } catch (const std::exception& ex) {
        throw StageError("train", ex.what());
    }
    write_emulation_common(art, cfg, data, e);

    json m = emulation_metrics(e);
    json runs = json::array();
    const double delta = cfg.reservoir.delta;
    for (double q : cfg.forward.q_values) {
        const ForwardSyncResult r = forward_sync(e, data.future, cfg.forward, q);
        const std::string stem = "sync_q" + q_label(q);
        const TimeSeries truth = data.future.slice(0, time_to_samples(cfg.forward.duration, delta));
        std::vector<double> y = r.run.y.values;
        y.resize(truth.size(), NAN);
        std::vector<double> qcol = r.run.q;
        qcol.resize(truth.size(), NAN);
        const std::string header[] = {"step", "t", "y", "s", "q"};
        const std::vector<double> cols[] = {index_column(truth.size()), time_column(truth), y, truth.values, qcol};
        write_table_csv(art.add(stem + ".csv"), header, cols);
        if (!r.run.windowed_nmse.empty()) write_trace(art, stem + "_nmse", r.run.windowed_nmse, cfg.forward.window, delta);
        runs.push_back({{"q", q},
                        {"segment_start", r.segment.start},
                        {"segment_end", r.segment.end},
                        {"diverged", r.run.diverged},
                        {"post_lock_nmse", opt_json(r.post_lock_nmse)},
                        {"locked", r.locked},
                        {"desync_ratio", opt_json(r.desync_ratio)}});
    }
    m["forward"] = runs;
    return m;
}

json run_inverse(const ExperimentConfig& cfg, Artifacts& art) {
    EmulationData data;
    try {
        data = prepare_emulation_data(cfg, future_samples_needed(cfg));
    } catch (const std::exception& ex) {
        throw StageError("integrate", ex.what());
    }
    TrainedEmulator e;
    try {
        e = train_for(cfg, data);
    } catch (const std::exception& ex) {
        throw StageError("train", ex.what());
    }
    write_emulation_common(art, cfg, data, e);
    const InverseSyncResult r = inverse_sync(cfg, e, data);

    if (!r.driven.empty()) {
        const std::size_t n = std::min(r.driven.size(), r.rc.size());
        const std::vector<double> rc(r.rc.values.begin(), r.rc.values.begin() + static_cast<std::ptrdiff_t>(n));
        const std::vector<double> dr(r.driven.values.begin(), r.driven.values.begin() + static_cast<std::ptrdiff_t>(n));
        const TimeSeries grid = r.rc.slice(0, n);
        const std::string header[] = {"step", "t", "rc", "driven"};
        const std::vector<double> cols[] = {index_column(n), time_column(grid), rc, dr};
        write_table_csv(art.add("inverse.csv"), header, cols);
        const PlotTrace plot[] = {{"reservoir", time_column(grid), rc}, {"driven system", time_column(grid), dr}};
        write_svg_plot(art.add("inverse.svg"), "inverse synchronisation", plot);
        write_trace(art, "inverse_nmse", r.windowed_nmse, cfg.inverse.window, cfg.reservoir.delta);
    }
    if (!r.lorenz_trajectory.values.empty()) write_csv(art.add("lorenz_driven.csv"), r.lorenz_trajectory);

    json m = emulation_metrics(e);
    m["inverse"] = {{"q", cfg.inverse.q},
                    {"t_on", cfg.inverse.t_on},
                    {"t_off", cfg.inverse.t_off},
                    {"mix_delayed", cfg.inverse.mix_delayed},
                    {"rc_diverged", r.rc_diverged},
                    {"failure", r.failure.empty() ? json(nullptr) : json(r.failure)},
                    {"locked_nmse", opt_json(r.locked_nmse)},
                    {"release_nmse", opt_json(r.release_nmse)},
                    {"desync_ratio", opt_json(r.desync_ratio)},
                    {"lobe_agreement", opt_json(r.lobe_agreement)}};
    return m;
}

json run_crypto_kind(const ExperimentConfig& cfg, Artifacts& art, json& summary) {
    CryptoResult r;
    try {
        r = run_crypto(cfg);
    } catch (const std::exception& ex) {
        throw StageError("crypto", ex.what());
    }
    write_csv(art.add("message.csv"), r.message);
    write_csv(art.add("ciphertext.csv"), r.ciphertext);
    write_csv(art.add("intercepted.csv"), r.intercepted);
    write_csv(art.add("bob_unfiltered.csv"), r.bob_unfiltered);
    if (r.bob_filtered) write_csv(art.add("bob_filtered.csv"), *r.bob_filtered);
    write_csv(art.add("eve.csv"), r.eve);
    write_spectrum_csv(art.add("spectrum_message.csv"), power_spectrum(r.message_test), true);
    write_spectrum_csv(art.add("spectrum_eve.csv"), power_spectrum(r.eve), true);
    write_spectrum_csv(art.add("spectrum_ciphertext.csv"), power_spectrum(r.ciphertext), true);
    const PlotTrace plot[] = {{"message", time_column(r.message_test), r.message_test.values},
                              {"eve", time_column(r.eve), r.eve.values}};
    write_svg_plot(art.add("eve.svg"), "Eve's recovered message (test)", plot);

    json m = {{"training_nmse", opt_json(r.eve_training_nmse)},
              {"eve_test_nmse", opt_json(r.eve_test_nmse)},
              {"bob_noiseless_nmse", opt_json(r.bob_noiseless_nmse)},
              {"bob_unfiltered_nmse", opt_json(r.bob_unfiltered_nmse)},
              {"bob_filtered_nmse", opt_json(r.bob_filtered_nmse)},
              {"snr", opt_json(r.snr)}};
    if (cfg.crypto.message == MessageKind::Fm) {
        const std::string header[] = {"t", "frequency"};
        const std::vector<double> cols[] = {r.eve_frequency.time, r.eve_frequency.frequency};
        write_table_csv(art.add("eve_frequency.csv"), header, cols);
        m["frequency_correlation"] = opt_json(r.frequency_correlation);
        m["eve_out_of_band"] = opt_json(r.eve_out_of_band);
        m["bob_out_of_band"] = opt_json(r.bob_out_of_band);
    } else {
        std::vector<double> sent, got, conf;
        for (std::size_t i = 0; i < r.sent_bits.size(); ++i) {
            sent.push_back(r.sent_bits[i]);
            got.push_back(r.decoded->bits[i]);
            conf.push_back(r.decoded->confidence[i]);
        }
        const std::string header[] = {"bit", "sent", "decoded", "confidence"};
        const std::vector<double> cols[] = {index_column(sent.size()), sent, got, conf};
        write_table_csv(art.add("bits.csv"), header, cols);
        m["ber"] = opt_json(r.ber);
        summary["ber"] = opt_json(r.ber);
    }
    return m;
}

}  // namespace

json run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto started = std::chrono::steady_clock::now();
    Artifacts art(resolve_output_dir(cfg, opt));
    json summary;
    summary["schema_version"] = kSummarySchemaVersion;
    summary["kind"] = to_string(cfg.kind);
    summary["name"] = cfg.name;
    json echo = cfg.source;
    echo["seeds"] = {{"topology", cfg.seeds.topology}, {"noise", cfg.seeds.noise}};
    summary["config"] = echo;

    json metrics;
    switch (cfg.kind) {
        case ExperimentKind::MgEmulate:
        case ExperimentKind::LorenzEmulate:
            metrics = run_emulate(cfg, art);
            break;
        case ExperimentKind::SyncForwardMg:
        case ExperimentKind::SyncForwardLorenz:
            metrics = run_forward(cfg, art);
            break;
        case ExperimentKind::SyncInverseMg:
        case ExperimentKind::SyncInverseLorenz:
            metrics = run_inverse(cfg, art);
            break;
        case ExperimentKind::CryptoFm:
        case ExperimentKind::CryptoBits:
            metrics = run_crypto_kind(cfg, art, summary);
            break;
    }
    summary["training_nmse"] = metrics.value("training_nmse", json(nullptr));
    summary["metrics"] = metrics;
    summary["artifacts"] = art.files();
    summary["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto path = resolve_output_dir(cfg, opt) / "summary.json";
    std::ofstream out(path);
    if (!out) throw StageError("summary", "cannot write " + path.string());
    out << summary.dump(2) << '\n';
    return summary;
}

}  // namespace chaosrc
