#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vigil/errors.hpp"

namespace vigil {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("[io] cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("[io] cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("[io] short write to " + path.string());
}

// Write-to-temp-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

}  // namespace vigil
