#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epidmd/errors.hpp"

namespace epidmd {

inline constexpr const char* tool_version = "0.1.0";

// FNV-1a 64 over raw bytes; stable across machines for identical input bytes.
inline std::uint64_t content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Provenance sidecar written next to every command's primary output.
struct RunManifest {
    std::string command;
    std::uint64_t config_digest = 0;
    std::uint64_t rng_seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        char digest_hex[24];
        std::snprintf(digest_hex, sizeof(digest_hex), "%016llx",
                      static_cast<unsigned long long>(config_digest));
        j["config_digest"] = digest_hex;
        j["rng_seed"] = rng_seed;
        j["tool_version"] = tool_version;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["duration_seconds"] = duration_seconds;
        return j;
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw ParseError("cannot open " + path.string() + " for writing");
        out << to_json().dump(2) << "\n";
    }
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace epidmd
