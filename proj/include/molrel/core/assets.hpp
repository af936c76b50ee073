#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "molrel/core/error.hpp"

#ifndef MOLREL_ASSET_DIR
#define MOLREL_ASSET_DIR "assets"
#endif

namespace molrel {

// Versioned text assets (templates, pattern tables, reference configs) live
// under one directory; MOLREL_ASSETS overrides the compiled-in default.
inline std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("MOLREL_ASSETS")) return env;
  return MOLREL_ASSET_DIR;
}

inline std::string read_asset(const std::string& relative) {
  std::filesystem::path p = asset_dir() / relative;
  std::ifstream f(p, std::ios::binary);
  if (!f)
    fail_runtime("asset: cannot open '", p.string(),
                 "' (set MOLREL_ASSETS to the assets directory)");
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

}  // namespace molrel
