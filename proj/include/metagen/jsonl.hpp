#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metagen/errors.hpp"

namespace metagen {

using json = nlohmann::json;

/// Streams a line-delimited JSON file. Blank lines are skipped; the handler
/// receives the 1-based line number for error reporting.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const json&)>& handler) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON record");
    }
    handler(lineno, record);
  }
}

inline void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open file for writing: " + path);
  }
  for (const auto& rec : records) {
    out << rec.dump() << "\n";
  }
  if (!out) {
    throw DataError("write failed: " + path);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open file for writing: " + path);
  }
  out << content;
  if (!out) {
    throw DataError("write failed: " + path);
  }
}

}  // namespace metagen
