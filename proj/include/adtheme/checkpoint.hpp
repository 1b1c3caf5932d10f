#pragma once

#include <string>

#include <json.hpp>

#include "adtheme/params.hpp"

namespace adtheme {

// Single-file parameter snapshot: a 4-byte little-endian header length, a
// JSON header (caller metadata plus a shape manifest in name order), then
// every tensor's entries row-major as little-endian float32.
void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const ParamStore& params);

struct Checkpoint {
  nlohmann::json meta;
  ParamStore params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace adtheme
