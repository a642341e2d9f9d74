#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

namespace testutil {

inline std::string fixture_path(const std::string& name) {
  return std::string(METAGEN_FIXTURE_DIR) + "/" + name;
}

/// Writes content to a fresh file under a per-process temp dir and returns the path.
inline std::string write_temp(const std::string& stem, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("metagen_tests_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::path p = dir / (stem + "_" + std::to_string(counter++));
  std::ofstream out(p, std::ios::binary);
  out << content;
  out.close();
  return p.string();
}

inline std::string temp_dir(const std::string& stem) {
  static std::atomic<unsigned> counter{0};
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("metagen_tests_" + std::to_string(::getpid())) /
                 (stem + "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace testutil
