#include "expomask/gtgen.hpp"

#include <array>
#include <charconv>
#include <string>
#include <utility>

#include "expomask/error.hpp"

namespace expomask {

ImageU8 mask_to_image(const BinaryMask& mask) {
  std::vector<std::uint8_t> data(mask.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = mask.m[i] ? 255 : 0;
  return ImageU8(mask.width, mask.height, 1, std::move(data));
}

BinaryMask mask_from_image(const ImageU8& image) {
  if (image.channels() != 1) {
    throw Error(ErrorCode::kNonBinaryGroundTruth, "mask image must have one channel");
  }
  BinaryMask mask(image.width(), image.height());
  const auto& d = image.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0 && d[i] != 255) {
      throw Error(ErrorCode::kNonBinaryGroundTruth,
                  "mask sample " + std::to_string(d[i]) + " is neither 0 nor 255");
    }
    mask.m[i] = d[i] == 255 ? 1 : 0;
  }
  return mask;
}

std::string_view to_string(ExposureClass cls) {
  return cls == ExposureClass::kLow ? "low" : "high";
}

ExposureClass parse_exposure_class(std::string_view text) {
  if (text == "low") return ExposureClass::kLow;
  if (text == "high") return ExposureClass::kHigh;
  throw Error(ErrorCode::kInvalidArgument, "exposure must be low or high, got '" + std::string(text) + "'");
}

void validate(const LumaRange& r) {
  if (r.lo < 0 || r.hi > 255 || r.lo > r.hi) {
    throw Error(ErrorCode::kInvalidParams,
                "luma range [" + std::to_string(r.lo) + "," + std::to_string(r.hi) + "] is invalid");
  }
}

void validate(const ThresholdRanges& ranges) {
  validate(ranges.low_range);
  validate(ranges.high_range);
}

LumaRange parse_luma_range(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "range must look like A:B, got '" + std::string(text) + "'");
  }
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::kInvalidArgument, "bad range bound '" + std::string(s) + "'");
    }
    return v;
  };
  LumaRange r{parse_int(text.substr(0, colon)), parse_int(text.substr(colon + 1))};
  validate(r);
  return r;
}

BinaryMask manual_mask(const LuminancePlane& plane, ExposureClass cls, const ThresholdRanges& ranges) {
  validate(ranges);
  const LumaRange& range = ranges.for_class(cls);
  BinaryMask mask(plane.width, plane.height);
  for (std::size_t i = 0; i < plane.size(); ++i) mask.m[i] = range.contains(plane.y[i]) ? 1 : 0;
  return mask;
}

namespace {

// num / den with num < 2^128 and den < 2^64.
struct Score {
  unsigned __int128 num;
  std::uint64_t den;
};

// a * b as a 192-bit value split into (high 128 bits, low 64 bits).
std::pair<unsigned __int128, std::uint64_t> mul_wide(unsigned __int128 a, std::uint64_t b) {
  const unsigned __int128 lo = static_cast<std::uint64_t>(a) * static_cast<unsigned __int128>(b);
  const unsigned __int128 hi = (a >> 64) * static_cast<unsigned __int128>(b);
  return {hi + (lo >> 64), static_cast<std::uint64_t>(lo)};
}

bool greater(const Score& a, const Score& b) { return mul_wide(a.num, b.den) > mul_wide(b.num, a.den); }

}  // namespace

int otsu_threshold(const LuminancePlane& plane) {
  if (plane.empty()) throw Error(ErrorCode::kEmptyPlane, "otsu_threshold on an empty plane");

  std::array<std::uint64_t, 256> hist{};
  for (auto v : plane.y) ++hist[v];

  const auto total = static_cast<std::int64_t>(plane.size());
  std::int64_t total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += v * static_cast<std::int64_t>(hist[v]);

  // With n0/s0 the count and sum of {Y <= t}, the between-class variance is
  // (s0*N - S*n0)^2 / (N^2 * n0 * n1); the N^2 factor is common to every t.
  // Scores are compared exactly by cross-multiplication so ties are real ties.
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  Score best{0, 1};
  int best_t = -1;
  for (int t = 0; t < 256; ++t) {
    n0 += static_cast<std::int64_t>(hist[t]);
    s0 += t * static_cast<std::int64_t>(hist[t]);
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const __int128 diff = static_cast<__int128>(s0) * total - static_cast<__int128>(total_sum) * n0;
    const auto mag = static_cast<unsigned __int128>(diff < 0 ? -diff : diff);
    const Score score{mag * mag, static_cast<std::uint64_t>(n0) * static_cast<std::uint64_t>(n1)};
    if (greater(score, best)) {
      best = score;
      best_t = t;
    }
  }
  // No split separates anything: the plane holds a single value.
  if (best_t < 0) return plane.y.front();
  return best_t;
}

BinaryMask otsu_mask(const LuminancePlane& plane, ExposureClass cls) {
  const int t = otsu_threshold(plane);
  BinaryMask mask(plane.width, plane.height);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const int y = plane.y[i];
    mask.m[i] = (cls == ExposureClass::kLow ? y > t : y < t) ? 1 : 0;
  }
  return mask;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_geometry(b)) throw Error(ErrorCode::kDimensionMismatch, "mask union of different sizes");
  BinaryMask out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.m[i] = (a.m[i] | b.m[i]) ? 1 : 0;
  return out;
}

BinaryMask residual_mask(const BinaryMask& low_mask, const BinaryMask& high_mask) {
  if (!low_mask.same_geometry(high_mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "residual of masks with different sizes");
  }
  BinaryMask out(low_mask.width, low_mask.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.m[i] = (low_mask.m[i] | high_mask.m[i]) ? 0 : 1;
  return out;
}

double mask_coverage(const BinaryMask& mask) {
  if (mask.empty()) throw Error(ErrorCode::kEmptyMask, "coverage of an empty mask");
  std::size_t ones = 0;
  for (auto v : mask.m) ones += v;
  return static_cast<double>(ones) / static_cast<double>(mask.size());
}

}  // namespace expomask
