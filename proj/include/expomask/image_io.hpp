#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "expomask/image.hpp"

namespace expomask {

// Decodes an 8-bit grayscale or RGB PNG. 16-bit, palette and alpha images are
// rejected with kUnsupportedFormat; a missing file raises kFileNotFound.
ImageU8 load_png(const std::filesystem::path& path);

// Writes an 8-bit grayscale or RGB PNG. Raises kIoError on failure.
void save_png(const ImageU8& image, const std::filesystem::path& path);

// One scene directory: <root>/<scene_id>/{low,mid,high}.png plus optional
// gt_low.png / gt_high.png / gt_mid.png.
struct SceneEntry {
  std::string scene_id;
  std::filesystem::path dir;
  std::filesystem::path low;
  std::filesystem::path mid;
  std::filesystem::path high;
  std::optional<std::filesystem::path> gt_low;
  std::optional<std::filesystem::path> gt_high;
  std::optional<std::filesystem::path> gt_mid;
};

struct DatasetScan {
  std::vector<SceneEntry> scenes;     // lexicographic by scene_id
  std::vector<std::string> warnings;  // incomplete scene directories
};

DatasetScan scan_dataset(const std::filesystem::path& root);

ExposureStack load_stack(const SceneEntry& entry);

// Writes low/mid/high.png into <root>/<scene_id>/, creating the directory.
SceneEntry write_stack(const ExposureStack& stack, const std::filesystem::path& root);

}  // namespace expomask
