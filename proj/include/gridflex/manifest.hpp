#pragma once

#include <string>
#include <vector>

namespace gridflex {

inline constexpr const char* kVersion = "0.1.0";

/// Provenance record emitted once per CLI invocation. The config hash covers
/// the command, the input file bytes and the serialized options, so
/// identical inputs on the same version always hash identically. The
/// timestamp is the only non-deterministic field and never enters data
/// outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::string config_hash;
  std::string version = kVersion;
  std::string timestamp;
  std::vector<std::string> outputs;
};

std::string fnv1a64_hex(const std::string& bytes);

/// Hash of command + each input file's bytes + options string.
std::string config_hash(const std::string& command,
                        const std::vector<std::string>& input_paths,
                        const std::string& options_repr);

std::string iso8601_utc_now();

std::string manifest_to_json(const RunManifest& manifest);

}  // namespace gridflex
