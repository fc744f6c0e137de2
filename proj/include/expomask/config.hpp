#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "expomask/gtgen.hpp"
#include "expomask/losses.hpp"
#include "expomask/unet.hpp"

namespace expomask {

enum class GtMethod { kManual, kOtsu };

std::string_view to_string(GtMethod method);
GtMethod parse_gt_method(std::string_view text);

struct TrainConfig {
  ExposureClass exposure_class = ExposureClass::kLow;
  GtMethod gt_method = GtMethod::kManual;
  LossKind loss = LossKind::kBce;
  double lr = 0.001;
  std::size_t batch_size = 4;
  std::size_t epochs = 200;
  std::size_t input_size = 64;
  std::size_t channel_scale = 1;
  double dropout_rate = 0.2;
  std::uint64_t seed = 0;
  std::size_t input_channels = 3;
  ThresholdRanges ranges;
  FocalParams focal;

  UNetConfig unet_config() const { return {input_channels, channel_scale}; }
};

// Throws kInvalidParams when a field is out of range (input_size not divisible
// by 16, batch_size 0, negative lr, ...). lr == 0 is allowed as a null update.
void validate(const TrainConfig& cfg);

// Applies one key=value setting; unknown keys raise kInvalidArgument.
void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value);

// Flat "key = value" text; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_key_values(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

// Every field as key=value pairs; apply_setting() reads them back.
std::map<std::string, std::string> config_settings(const TrainConfig& cfg);

}  // namespace expomask
