#pragma once

// Binary WeightSet files: "CRCW" magic, format version, a JSON echo of the
// reservoir config, then the arrays as little-endian doubles, row-major.

#include "chaosrc/reservoir.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>

namespace chaosrc {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

class WeightFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoredWeights {
    ReservoirConfig cfg;
    WeightSet weights;
};

void to_json(nlohmann::json& j, const ReservoirConfig& cfg);
/// Missing keys keep their defaults; unknown keys are ignored here (the
/// experiment loader is the strict one).
void from_json(const nlohmann::json& j, ReservoirConfig& cfg);

void save_weights(const std::filesystem::path& path, const WeightSet& w, const ReservoirConfig& cfg);
StoredWeights load_weights(const std::filesystem::path& path);

/// In-memory form of the file, used for byte-level comparisons.
std::string serialize_weights(const WeightSet& w, const ReservoirConfig& cfg);
StoredWeights deserialize_weights(const std::string& bytes);

}  // namespace chaosrc
