#include "expomask/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

#include "expomask/error.hpp"

namespace expomask {

namespace fs = std::filesystem;

namespace {

// Frees libpng's read/write state on every exit path.
class PngImage {
 public:
  PngImage() {
    std::memset(&image_, 0, sizeof(image_));
    image_.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image_); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  png_image* get() { return &image_; }
  png_image* operator->() { return &image_; }

 private:
  png_image image_;
};

}  // namespace

ImageU8 load_png(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kFileNotFound, path.string());
  }

  PngImage png;
  if (png_image_begin_read_from_file(png.get(), path.c_str()) == 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": " + png->message);
  }
  const auto format = png->format;
  if ((format & PNG_FORMAT_FLAG_LINEAR) != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": bit depth is not 8");
  }
  if ((format & PNG_FORMAT_FLAG_COLORMAP) != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": palette images are not supported");
  }
  if ((format & PNG_FORMAT_FLAG_ALPHA) != 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": alpha channel present");
  }

  const bool color = (format & PNG_FORMAT_FLAG_COLOR) != 0;
  png->format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(*png.get()));
  if (png_image_finish_read(png.get(), nullptr, data.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": " + png->message);
  }
  return ImageU8(png->width, png->height, channels, std::move(data));
}

void save_png(const ImageU8& image, const fs::path& path) {
  if (image.empty()) throw Error(ErrorCode::kIoError, "refusing to write an empty image");
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) {
    throw Error(ErrorCode::kIoError, "directory does not exist: " + parent.string());
  }

  PngImage png;
  png->width = static_cast<png_uint_32>(image.width());
  png->height = static_cast<png_uint_32>(image.height());
  png->format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (png_image_write_to_file(png.get(), path.c_str(), 0, image.data().data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::kIoError, path.string() + ": " + png->message);
  }
}

DatasetScan scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIoError, "dataset root is not a directory: " + root.string());
  }

  std::vector<fs::path> dirs;
  for (const auto& item : fs::directory_iterator(root, ec)) {
    if (item.is_directory()) dirs.push_back(item.path());
  }
  if (ec) throw Error(ErrorCode::kIoError, root.string() + ": " + ec.message());
  std::sort(dirs.begin(), dirs.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });

  DatasetScan scan;
  for (const auto& dir : dirs) {
    SceneEntry entry;
    entry.scene_id = dir.filename().string();
    entry.dir = dir;
    entry.low = dir / "low.png";
    entry.mid = dir / "mid.png";
    entry.high = dir / "high.png";

    std::vector<std::string> missing;
    for (const auto* p : {&entry.low, &entry.mid, &entry.high}) {
      if (!fs::is_regular_file(*p, ec)) missing.push_back(p->filename().string());
    }
    if (!missing.empty()) {
      std::string msg = "scene '" + entry.scene_id + "' skipped, missing";
      for (const auto& m : missing) msg += " " + m;
      scan.warnings.push_back(std::move(msg));
      continue;
    }

    auto optional_file = [&](const char* name) -> std::optional<fs::path> {
      fs::path p = dir / name;
      if (fs::is_regular_file(p, ec)) return p;
      return std::nullopt;
    };
    entry.gt_low = optional_file("gt_low.png");
    entry.gt_high = optional_file("gt_high.png");
    entry.gt_mid = optional_file("gt_mid.png");
    scan.scenes.push_back(std::move(entry));
  }
  return scan;
}

ExposureStack load_stack(const SceneEntry& entry) {
  ExposureStack stack{load_png(entry.low), load_png(entry.mid), load_png(entry.high), entry.scene_id};
  validate_stack(stack);
  return stack;
}

SceneEntry write_stack(const ExposureStack& stack, const fs::path& root) {
  validate_stack(stack);
  SceneEntry entry;
  entry.scene_id = stack.scene_id;
  entry.dir = root / stack.scene_id;
  std::error_code ec;
  fs::create_directories(entry.dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, entry.dir.string() + ": " + ec.message());
  entry.low = entry.dir / "low.png";
  entry.mid = entry.dir / "mid.png";
  entry.high = entry.dir / "high.png";
  save_png(stack.low, entry.low);
  save_png(stack.mid, entry.mid);
  save_png(stack.high, entry.high);
  return entry;
}

}  // namespace expomask
