#include "flex/manifest.hpp"

#include <fstream>

#include "flex/errors.hpp"
#include "json.hpp"

namespace flex {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string manifest_hash(const RunManifest& m) {
    std::string key = m.command;
    key += '\n';
    key += m.config_json;
    for (std::uint64_t s : m.seeds) {
        key += '\n';
        key += std::to_string(s);
    }
    return hash_hex(fnv1a64(key));
}

void write_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::json j;
    j["command"] = m.command;
    j["config"] = nlohmann::json::parse(m.config_json);
    j["seeds"] = m.seeds;
    j["instance_hash"] = m.instance_hash;
    j["spec_version"] = m.spec_version;
    j["wallclock_s"] = m.wallclock_s;
    j["outputs"] = m.outputs;
    std::ofstream out(path);
    if (!out) throw ValidationError("(file)", "cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

} // namespace flex
