#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "metagen/errors.hpp"
#include "metagen/hash.hpp"
#include "metagen/jsonl.hpp"

namespace metagen {

namespace detail {

inline std::string iso8601_utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// One pipeline step: which command ran, under which config, consuming and
/// producing which artifact bytes. Checksums tie steps together so any
/// artifact's ancestry can be walked back to the raw dataset.
struct ManifestEntry {
  std::string command;
  std::string timestamp;
  std::string config_fingerprint;
  std::map<std::string, std::string> inputs;   // path -> content checksum
  std::map<std::string, std::string> outputs;  // path -> content checksum
  json extra = json::object();                 // command-specific facts

  bool operator==(const ManifestEntry&) const = default;
};

inline json manifest_entry_to_json(const ManifestEntry& e) {
  return json{{"command", e.command},
              {"timestamp", e.timestamp},
              {"config_fingerprint", e.config_fingerprint},
              {"inputs", e.inputs},
              {"outputs", e.outputs},
              {"extra", e.extra}};
}

inline ManifestEntry manifest_entry_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) {
    throw DataError(where + ": manifest entry must be an object");
  }
  ManifestEntry e;
  try {
    e.command = j.at("command").get<std::string>();
    e.timestamp = j.at("timestamp").get<std::string>();
    e.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    e.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    e.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    e.extra = j.value("extra", json::object());
  } catch (const json::exception& ex) {
    throw DataError(where + ": " + ex.what());
  }
  return e;
}

/// Appends one line; the file is created (with parent directories) on first use.
inline void append_manifest(const std::string& path, const ManifestEntry& entry) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    throw DataError("cannot open manifest for append: " + path);
  }
  out << manifest_entry_to_json(entry).dump() << "\n";
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::vector<ManifestEntry> entries;
  for_each_jsonl(path, [&](std::size_t lineno, const json& rec) {
    entries.push_back(manifest_entry_from_json(rec, path + ":" + std::to_string(lineno)));
  });
  return entries;
}

/// Ancestry of an artifact: the latest entry that produced it, then
/// recursively the producers of that entry's inputs. Each producer appears
/// once, nearest first. Inputs with no producer on record (raw datasets)
/// terminate their branch silently.
inline std::vector<ManifestEntry> provenance_walk(const std::vector<ManifestEntry>& entries,
                                                  const std::string& artifact) {
  std::vector<ManifestEntry> chain;
  std::set<std::size_t> visited;
  // Search strictly before `before` so re-derived artifacts resolve to the
  // run that actually fed the step under inspection.
  auto visit = [&](auto&& self, const std::string& path, std::size_t before) -> bool {
    for (std::size_t i = before; i-- > 0;) {
      if (entries[i].outputs.count(path) == 0) {
        continue;
      }
      if (visited.insert(i).second) {
        chain.push_back(entries[i]);
        for (const auto& [input, checksum] : entries[i].inputs) {
          (void)checksum;
          self(self, input, i);
        }
      }
      return true;
    }
    return false;
  };
  if (!visit(visit, artifact, entries.size())) {
    throw DataError("no manifest entry produced '" + artifact + "'");
  }
  return chain;
}

}  // namespace metagen
