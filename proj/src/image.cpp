#include "expomask/image.hpp"

#include <algorithm>
#include <cmath>

#include "expomask/error.hpp"

namespace expomask {

namespace {

void check_geometry(std::size_t width, std::size_t height, std::size_t channels) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "image channels must be 1 or 3");
  }
  if ((width == 0) != (height == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "image extents must both be zero or both positive");
  }
}

// Maps a destination coordinate to a source coordinate under half-pixel centres.
double source_coord(std::size_t dst, std::size_t dst_extent, std::size_t src_extent) {
  const double scale = static_cast<double>(src_extent) / static_cast<double>(dst_extent);
  return (static_cast<double>(dst) + 0.5) * scale - 0.5;
}

}  // namespace

ImageU8::ImageU8(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels),
      data_(width * height * channels, fill) {
  check_geometry(width, height, channels);
}

ImageU8::ImageU8(std::size_t width, std::size_t height, std::size_t channels,
                 std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_geometry(width, height, channels);
  if (data_.size() != width * height * channels) {
    throw Error(ErrorCode::kInvalidArgument, "image data length does not match geometry");
  }
}

void validate_stack(const ExposureStack& stack) {
  if (!stack.low.same_geometry(stack.mid) || !stack.low.same_geometry(stack.high)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "exposure stack '" + stack.scene_id + "' has mismatched image geometry");
  }
}

ImageU8 resize_bilinear(const ImageU8& src, std::size_t width, std::size_t height) {
  if (src.empty() || width == 0 || height == 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize of or to an empty image");
  }
  if (width == src.width() && height == src.height()) return src;

  ImageU8 dst(width, height, src.channels());
  const auto last_row = static_cast<double>(src.height() - 1);
  const auto last_col = static_cast<double>(src.width() - 1);
  for (std::size_t r = 0; r < height; ++r) {
    const double sy = std::clamp(source_coord(r, height, src.height()), 0.0, last_row);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, src.height() - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t c = 0; c < width; ++c) {
      const double sx = std::clamp(source_coord(c, width, src.width()), 0.0, last_col);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, src.width() - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < src.channels(); ++ch) {
        const double top = (1.0 - fx) * src.at(y0, x0, ch) + fx * src.at(y0, x1, ch);
        const double bottom = (1.0 - fx) * src.at(y1, x0, ch) + fx * src.at(y1, x1, ch);
        const double v = (1.0 - fy) * top + fy * bottom;
        dst.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return dst;
}

ImageU8 resize_nearest(const ImageU8& src, std::size_t width, std::size_t height) {
  if (src.empty() || width == 0 || height == 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize of or to an empty image");
  }
  if (width == src.width() && height == src.height()) return src;

  ImageU8 dst(width, height, src.channels());
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = std::min(r * src.height() / height, src.height() - 1);
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t sc = std::min(c * src.width() / width, src.width() - 1);
      for (std::size_t ch = 0; ch < src.channels(); ++ch) dst.at(r, c, ch) = src.at(sr, sc, ch);
    }
  }
  return dst;
}

}  // namespace expomask
