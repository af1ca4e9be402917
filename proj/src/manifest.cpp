#include "gridflex/manifest.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gridflex {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string config_hash(const std::string& command,
                        const std::vector<std::string>& input_paths,
                        const std::string& options_repr) {
  std::string blob = command;
  blob += '\n';
  for (const auto& path : input_paths) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    blob += buf.str();
    blob += '\n';
  }
  blob += options_repr;
  return fnv1a64_hex(blob);
}

std::string iso8601_utc_now() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const RunManifest& manifest) {
  nlohmann::json doc;
  doc["command"] = manifest.command;
  doc["inputs"] = manifest.inputs;
  doc["config_hash"] = manifest.config_hash;
  doc["version"] = manifest.version;
  doc["timestamp"] = manifest.timestamp;
  doc["outputs"] = manifest.outputs;
  return doc.dump(2);
}

}  // namespace gridflex
