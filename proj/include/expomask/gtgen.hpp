#pragma once

#include <cstdint>
#include <string_view>

#include "expomask/color.hpp"
#include "expomask/mask.hpp"

namespace expomask {

enum class ExposureClass { kLow, kHigh };

std::string_view to_string(ExposureClass cls);
ExposureClass parse_exposure_class(std::string_view text);

// Inclusive luminance interval.
struct LumaRange {
  int lo = 0;
  int hi = 255;

  bool contains(int y) const { return y >= lo && y <= hi; }
  friend bool operator==(const LumaRange&, const LumaRange&) = default;
};

struct ThresholdRanges {
  LumaRange low_range{120, 255};
  LumaRange high_range{0, 200};

  const LumaRange& for_class(ExposureClass cls) const {
    return cls == ExposureClass::kLow ? low_range : high_range;
  }
};

// Throws kInvalidParams unless 0 <= lo <= hi <= 255.
void validate(const LumaRange& range);
void validate(const ThresholdRanges& ranges);

// Parses "A:B" into an inclusive range.
LumaRange parse_luma_range(std::string_view text);

BinaryMask manual_mask(const LuminancePlane& plane, ExposureClass cls,
                       const ThresholdRanges& ranges = {});

// Otsu's threshold on the 256-bin histogram, classes {Y <= t} and {Y > t}.
// Ties go to the smallest t. A single-valued plane returns that value.
int otsu_threshold(const LuminancePlane& plane);

// Low: 1 where Y > t.  High: 1 where Y < t.  Y == t is 0 for both.
BinaryMask otsu_mask(const LuminancePlane& plane, ExposureClass cls);

// Pixels claimed by neither mask: NOT(low OR high).
BinaryMask residual_mask(const BinaryMask& low_mask, const BinaryMask& high_mask);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

double mask_coverage(const BinaryMask& mask);

}  // namespace expomask
