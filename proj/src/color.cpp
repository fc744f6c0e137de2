#include "expomask/color.hpp"

namespace expomask {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // Weights scaled by 1000 keep the rounding exact; they sum to 1000 so the
  // result never exceeds 255.
  const unsigned v = 299u * r + 587u * g + 114u * b;
  return static_cast<std::uint8_t>((v + 500u) / 1000u);
}

LuminancePlane luminance(const ImageU8& image) {
  LuminancePlane plane{image.width(), image.height(), {}};
  if (image.channels() == 1) {
    plane.y = image.data();
    return plane;
  }
  plane.y.resize(image.pixel_count());
  const auto& d = image.data();
  for (std::size_t i = 0; i < plane.y.size(); ++i) {
    plane.y[i] = luma(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
  }
  return plane;
}

ImageU8 to_image(const LuminancePlane& plane) {
  return ImageU8(plane.width, plane.height, 1, plane.y);
}

}  // namespace expomask
