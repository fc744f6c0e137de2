#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "expomask/image.hpp"

namespace expomask {

// H x W plane of 8-bit luma samples.
struct LuminancePlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
  std::uint8_t at(std::size_t row, std::size_t col) const { return y[row * width + col]; }

  friend bool operator==(const LuminancePlane&, const LuminancePlane&) = default;
};

// Full-range BT.601 luma, Y = round(0.299 R + 0.587 G + 0.114 B) with halves
// rounded up. Single-channel images pass through unchanged.
LuminancePlane luminance(const ImageU8& image);

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

ImageU8 to_image(const LuminancePlane& plane);

}  // namespace expomask
