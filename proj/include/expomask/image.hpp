#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace expomask {

// Row-major interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
class ImageU8 {
 public:
  ImageU8() = default;
  ImageU8(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0);
  ImageU8(std::size_t width, std::size_t height, std::size_t channels,
          std::vector<std::uint8_t> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t pixel_count() const { return width_ * height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return data_[(row * width_ + col) * channels_ + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return data_[(row * width_ + col) * channels_ + ch];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool same_geometry(const ImageU8& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const ImageU8&, const ImageU8&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 1;
  std::vector<std::uint8_t> data_;
};

struct ExposureStack {
  ImageU8 low;
  ImageU8 mid;
  ImageU8 high;
  std::string scene_id;
};

// Throws kDimensionMismatch unless all three exposures share geometry.
void validate_stack(const ExposureStack& stack);

// Half-pixel-centred bilinear resampling, rounded to nearest. Identity when
// the size is unchanged.
ImageU8 resize_bilinear(const ImageU8& src, std::size_t width, std::size_t height);

// Nearest-neighbour resampling; preserves the exact set of sample values.
ImageU8 resize_nearest(const ImageU8& src, std::size_t width, std::size_t height);

}  // namespace expomask
