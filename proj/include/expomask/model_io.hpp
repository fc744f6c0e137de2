#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "expomask/unet.hpp"

namespace expomask {

inline constexpr std::string_view kModelMagic = "EXPOMASK1";

// Layout:
//   EXPOMASK1\n
//   meta <key> <value>\n              (sorted by key; architecture keys included)
//   tensor <name> <rank> <dims...> <offset>\n
//   end <payload bytes>\n
//   payload: little-endian IEEE-754 doubles, offsets relative to its start.
struct ModelFile {
  UNetParams params;
  std::map<std::string, std::string> metadata;  // excludes architecture keys
};

std::string serialize_model(const UNetParams& params, const std::map<std::string, std::string>& metadata = {});

// Validates magic, manifest and every tensor shape against the architecture
// recorded in the file and, if given, against `expected`. Throws kModelFormat
// or kShapeMismatch.
ModelFile deserialize_model(const std::string& bytes, const std::optional<UNetConfig>& expected = std::nullopt);

void save_model(const std::filesystem::path& path, const UNetParams& params,
                const std::map<std::string, std::string>& metadata = {});
ModelFile load_model(const std::filesystem::path& path, const std::optional<UNetConfig>& expected = std::nullopt);

}  // namespace expomask
