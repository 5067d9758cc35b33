#include "rulkit/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "rulkit/errors.hpp"

namespace rulkit {

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path + " for digest");
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string digest_hex(std::uint64_t digest) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& dir) {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["subcommand"] = manifest.subcommand;
    j["master_seed"] = manifest.master_seed;
    j["config"] = manifest.config;
    j["inputs"] = manifest.input_digests;
    j["outputs"] = manifest.output_digests;
    j["duration_s"] = manifest.duration_s;

    const auto path = std::filesystem::path(dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

}  // namespace rulkit
