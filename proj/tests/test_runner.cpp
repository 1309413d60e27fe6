#include "chaosrc/runner.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chaosrc;
namespace fs = std::filesystem;

namespace {

const char* kSmallMg = R"({
  "kind": "mg-emulate",
  "output_dir": "mg-small",
  "seeds": {"topology": 3, "noise": 4},
  "reservoir": {"nodes": 80},
  "split": {"transient": 200, "train": 800, "test": 400}
})";

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
    try {
        validate_config(text);
    } catch (const ConfigError& e) {
        return e.diagnostics();
    }
    return {};
}

bool has_field(const std::vector<Diagnostic>& d, const std::string& field) {
    return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.field == field; });
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("chaosrc_runner_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("experiment kinds") {
    for (auto k : {ExperimentKind::MgEmulate, ExperimentKind::LorenzEmulate, ExperimentKind::SyncForwardMg,
                   ExperimentKind::SyncForwardLorenz, ExperimentKind::SyncInverseMg, ExperimentKind::SyncInverseLorenz,
                   ExperimentKind::CryptoFm, ExperimentKind::CryptoBits}) {
        CHECK(parse_kind(to_string(k)) == k);
    }
    CHECK_FALSE(parse_kind("mg-emulation").has_value());
    CHECK(uses_lorenz(ExperimentKind::SyncInverseLorenz));
    CHECK_FALSE(uses_lorenz(ExperimentKind::CryptoFm));
}

TEST_CASE("kind defaults are applied") {
    const auto cfg = validate_config(kSmallMg);
    CHECK(cfg.reservoir.nodes == 80);
    CHECK(cfg.reservoir.spectral_radius == 0.79);
    CHECK(cfg.reservoir.timescale == 0.44);
    CHECK(cfg.system.dt == 0.5);
    CHECK(cfg.seeds.topology == 3);
    CHECK(cfg.seeds.noise == 4);
    CHECK(cfg.split.train == 800);
    CHECK(cfg.washout == 100);

    const auto lz = validate_config(R"({"kind": "lorenz-emulate", "output_dir": "x", "seeds": {"topology": 1, "noise": 1}})");
    CHECK(lz.reservoir.spectral_radius == 0.97);
    CHECK(lz.reservoir.input_scale == 0.5);
    CHECK(lz.system.scale == 0.01);
    CHECK(lz.split.train == 6000);
}

TEST_CASE("missing seed is named") {
    const auto d = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x", "seeds": {"topology": 1}})");
    REQUIRE_FALSE(d.empty());
    CHECK(has_field(d, "seeds.noise"));
    const auto none = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x"})");
    CHECK(has_field(none, "seeds"));
}

TEST_CASE("coupling out of range") {
    const auto d = diagnostics_of(R"({"kind": "sync-forward-mg", "output_dir": "x",
        "seeds": {"topology": 1, "noise": 1}, "forward": {"q": [0.25, 1.5]}})");
    REQUIRE(has_field(d, "forward.q[1]"));
    const auto it = std::find_if(d.begin(), d.end(), [](const Diagnostic& x) { return x.field == "forward.q[1]"; });
    CHECK(it->message.find("outside [0, 1]") != std::string::npos);

    const auto inv = diagnostics_of(R"({"kind": "sync-inverse-mg", "output_dir": "x",
        "seeds": {"topology": 1, "noise": 1}, "inverse": {"q": 1.5}})");
    CHECK(has_field(inv, "inverse.q"));
}

TEST_CASE("unknown keys and wrong sections are rejected") {
    auto d = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x", "seeds": {"topology": 1, "noise": 1},
        "reservoir": {"nodez": 10}})");
    CHECK(has_field(d, "reservoir.nodez"));

    d = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x", "seeds": {"topology": 1, "noise": 1},
        "crypto": {}})");
    CHECK_FALSE(d.empty());

    d = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x", "seeds": {"topology": 1, "noise": 1},
        "system": {"sigma": 10}})");
    CHECK(has_field(d, "system.sigma"));

    d = diagnostics_of(R"({"kind": "warp-drive", "output_dir": "x", "seeds": {"topology": 1, "noise": 1}})");
    CHECK(has_field(d, "kind"));

    d = diagnostics_of(R"({"kind": "mg-emulate", "output_dir": "x", "seeds": {"topology": 1, "noise": 1},
        "reservoir": {"nodes": "many", "delta": 0.75}})");
    CHECK(has_field(d, "reservoir.nodes"));
    CHECK(d.size() >= 2);
}

TEST_CASE("syntax errors carry a position") {
    try {
        validate_config("{\n  \"kind\": \"mg-emulate\",\n  \"output_dir\": \n}");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("syntax error") != std::string::npos);
        CHECK(what.find("line 4") != std::string::npos);
        CHECK(what.find("column") != std::string::npos);
    }
}

TEST_CASE("shipped presets parse") {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(CHAOSRC_SOURCE_DIR) / "presets")) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path()));
        ++count;
    }
    CHECK(count == 8);
}

TEST_CASE("output directory resolution") {
    auto cfg = validate_config(kSmallMg);
    CHECK(resolve_output_dir(cfg, {}) == fs::path("mg-small"));
    CHECK(resolve_output_dir(cfg, RunOptions{fs::path("/data")}) == fs::path("/data/mg-small"));
    cfg.output_dir = "/abs/out";
    CHECK(resolve_output_dir(cfg, RunOptions{fs::path("/data")}) == fs::path("/abs/out"));
}

TEST_CASE("a run is fully determined by config and seeds") {
    const auto cfg = validate_config(kSmallMg);
    const auto root_a = scratch("a");
    const auto root_b = scratch("b");
    auto a = run_experiment(cfg, RunOptions{root_a});
    auto b = run_experiment(cfg, RunOptions{root_b});
    CHECK(a.at("schema_version") == kSummarySchemaVersion);
    CHECK(a.at("kind") == "mg-emulate");
    CHECK(a.at("training_nmse").get<double>() < 1e-3);
    a.erase("wall_clock_seconds");
    b.erase("wall_clock_seconds");
    CHECK(a == b);

    std::size_t files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root_a / "mg-small")) {
        if (!entry.is_regular_file() || entry.path().filename() == "summary.json") continue;
        const auto rel = fs::relative(entry.path(), root_a);
        INFO(rel.string());
        CHECK(slurp(entry.path()) == slurp(root_b / rel));
        ++files;
    }
    CHECK(files > 0);

    auto other = cfg;
    other.seeds.topology = 5;
    other.reservoir.seed = 5;
    auto c = run_experiment(other, RunOptions{scratch("c")});
    CHECK(c.at("training_nmse") != a.at("training_nmse"));
    fs::remove_all(root_a);
    fs::remove_all(root_b);
    fs::remove_all(scratch("c"));
}

TEST_CASE("a small bitstream run reports a bit error rate") {
    const auto cfg = validate_config(R"({
      "kind": "crypto-bits", "output_dir": "bits-small",
      "seeds": {"topology": 1, "noise": 1},
      "reservoir": {"nodes": 40},
      "crypto": {"test_bits": 5}
    })");
    const auto root = scratch("bits");
    const auto s = run_experiment(cfg, RunOptions{root});
    const auto& m = s.at("metrics");
    REQUIRE(m.contains("ber"));
    CHECK(m.at("ber").get<double>() >= 0.0);
    CHECK(m.at("ber").get<double>() <= 1.0);
    CHECK(fs::exists(root / "bits-small" / "summary.json"));
    fs::remove_all(root);
}
