#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

namespace rulkit {

constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a over the file bytes; change-detection digest for manifests, not a
/// cryptographic hash.
std::uint64_t fnv1a64_file(const std::string& path);
std::string digest_hex(std::uint64_t digest);

/// Self-describing record of one CLI run, written as manifest.json into the
/// output directory.
struct RunManifest {
    std::string subcommand;
    nlohmann::ordered_json config;
    std::map<std::string, std::string> input_digests;
    std::map<std::string, std::string> output_digests;
    std::uint64_t master_seed = 0;
    double duration_s = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& dir);

}  // namespace rulkit
