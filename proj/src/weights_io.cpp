#include "chaosrc/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chaosrc {

void to_json(nlohmann::json& j, const ReservoirConfig& cfg) {
    j = nlohmann::json{{"nodes", cfg.nodes},
                       {"timescale", cfg.timescale},
                       {"leak", cfg.leak},
                       {"spectral_radius", cfg.spectral_radius},
                       {"input_scale", cfg.input_scale},
                       {"feedback_scale", cfg.feedback_scale},
                       {"input_bias", cfg.input_bias},
                       {"delta", cfg.delta},
                       {"seed", cfg.seed},
                       {"reg_noise_amplitude", cfg.reg_noise_amplitude}};
}

void from_json(const nlohmann::json& j, ReservoirConfig& cfg) {
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("nodes", cfg.nodes);
    get("timescale", cfg.timescale);
    get("leak", cfg.leak);
    get("spectral_radius", cfg.spectral_radius);
    get("input_scale", cfg.input_scale);
    get("feedback_scale", cfg.feedback_scale);
    get("input_bias", cfg.input_bias);
    get("delta", cfg.delta);
    get("seed", cfg.seed);
    get("reg_noise_amplitude", cfg.reg_noise_amplitude);
}

namespace {

constexpr char kMagic[4] = {'C', 'R', 'C', 'W'};

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_doubles(std::string& out, const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) put_u64(out, std::bit_cast<std::uint64_t>(data[i]));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    const char* take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw WeightFormatError("weight file truncated at byte " + std::to_string(pos_));
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t u64() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(8));
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    std::uint32_t u32() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(4));
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }
    void doubles(double* dst, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) dst[i] = std::bit_cast<double>(u64());
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_weights(const WeightSet& w, const ReservoirConfig& cfg) {
    const Eigen::Index n = w.nodes();
    if (w.internal.cols() != n || w.input.size() != n || w.feedback.size() != n) {
        throw std::invalid_argument("serialize_weights: inconsistent array sizes");
    }
    if (w.readout && w.readout->size() != n + 1) throw std::invalid_argument("serialize_weights: readout length");

    std::string out(kMagic, 4);
    put_u32(out, kWeightFormatVersion);
    const std::string echo = nlohmann::json(cfg).dump();
    put_u64(out, echo.size());
    out += echo;
    put_u64(out, static_cast<std::uint64_t>(n));
    out.push_back(w.readout ? 1 : 0);

    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = w.internal;
    put_doubles(out, rows.data(), rows.size());
    put_doubles(out, w.input.data(), n);
    put_doubles(out, w.feedback.data(), n);
    if (w.readout) put_doubles(out, w.readout->data(), n + 1);
    return out;
}

StoredWeights deserialize_weights(const std::string& bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(4), kMagic, 4) != 0) throw WeightFormatError("not a weight file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kWeightFormatVersion) {
        throw WeightFormatError("unsupported weight file version " + std::to_string(version));
    }
    const std::uint64_t echo_len = r.u64();
    if (echo_len > bytes.size()) throw WeightFormatError("weight file truncated in config echo");
    const char* echo = r.take(echo_len);

    StoredWeights s;
    try {
        s.cfg = nlohmann::json::parse(echo, echo + echo_len).get<ReservoirConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw WeightFormatError(std::string("bad config echo: ") + e.what());
    }
    const auto n = static_cast<Eigen::Index>(r.u64());
    if (n < 1 || n != s.cfg.nodes) throw WeightFormatError("node count disagrees with config echo");
    const bool has_readout = *r.take(1) != 0;

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(n, n);
    r.doubles(rows.data(), rows.size());
    s.weights.internal = rows;
    s.weights.input.resize(n);
    r.doubles(s.weights.input.data(), n);
    s.weights.feedback.resize(n);
    r.doubles(s.weights.feedback.data(), n);
    if (has_readout) {
        Vector out(n + 1);
        r.doubles(out.data(), n + 1);
        s.weights.readout = std::move(out);
    }
    if (!r.done()) throw WeightFormatError("trailing bytes after weight arrays");
    return s;
}

void save_weights(const std::filesystem::path& path, const WeightSet& w, const ReservoirConfig& cfg) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    const std::string bytes = serialize_weights(w, cfg);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

StoredWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_weights(buf.str());
}

}  // namespace chaosrc
