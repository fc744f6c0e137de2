#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "expomask/image.hpp"

namespace expomask {

// H x W mask with values in {0,1}; 1 marks a well-exposed pixel.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> m;

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), m(w * h, fill) {}

  std::size_t size() const { return m.size(); }
  bool empty() const { return m.empty(); }
  bool same_geometry(const BinaryMask& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// 1-channel {0,255} image, 255 marking mask value 1.
ImageU8 mask_to_image(const BinaryMask& mask);

// Accepts 1-channel images whose samples are all 0 or 255; anything else
// raises kNonBinaryGroundTruth.
BinaryMask mask_from_image(const ImageU8& image);

}  // namespace expomask
