#ifndef FLEX_MANIFEST_HPP
#define FLEX_MANIFEST_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flex {

inline constexpr const char* kFlexVersion = "0.1.0";

// Written next to every command's outputs: enough to re-run it exactly and to
// tie result files back to their inputs. wallclock_s is informational and is
// the one field excluded from reproducibility comparisons.
struct RunManifest {
    std::string command;
    std::string config_json; // full flag settings, canonical JSON text
    std::vector<std::uint64_t> seeds;
    std::string instance_hash;
    std::string spec_version = kFlexVersion;
    double wallclock_s = 0.0;
    std::vector<std::string> outputs;
};

std::uint64_t fnv1a64(std::string_view s);
std::string hash_hex(std::uint64_t h);

// Hash of (command, config, seeds): names the run directory.
std::string manifest_hash(const RunManifest& m);

void write_manifest(const RunManifest& m, const std::string& path);

} // namespace flex

#endif
