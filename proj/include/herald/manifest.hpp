#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "herald/errors.hpp"
#include "herald/rng.hpp"

namespace herald {

/// Everything needed to reproduce a run. The volatile part (timings) only
/// goes into report JSON; the stable part is embedded in every output
/// file, including the metrics CSV header, so reruns of the same manifest
/// must be byte-identical.
struct RunManifest {
    nlohmann::json resolved_config;  // all defaults materialized
    std::string dataset_path;
    std::string dataset_checksum;
    std::uint64_t seed = 0;
    std::string build_id;
    double wall_seconds = 0.0;

    nlohmann::json stable_json() const {
        return {{"config", resolved_config},
                {"dataset", dataset_path},
                {"dataset_checksum", dataset_checksum},
                {"seed", seed},
                {"build_id", build_id}};
    }

    nlohmann::json to_json() const {
        nlohmann::json j = stable_json();
        j["wall_seconds"] = wall_seconds;
        return j;
    }
};

inline std::string checksum_hex(std::uint64_t value) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << value;
    return os.str();
}

inline std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataErrorCode::missing_file, path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        h = fnv1a64(buffer, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

/// Checksum of a dataset path: the file itself, or for a directory the
/// concatenated (name, contents) pairs of its regular files in sorted
/// name order.
inline std::string dataset_checksum(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file()) names.push_back(entry.path().string());
        }
        std::sort(names.begin(), names.end());
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& name : names) {
            h = fnv1a64(name.data(), name.size(), h);
            h ^= file_checksum(name);
            h *= 0x100000001b3ULL;
        }
        return checksum_hex(h);
    }
    return checksum_hex(file_checksum(path));
}

}  // namespace herald
