#include "expomask/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "expomask/error.hpp"

namespace expomask {

std::string_view to_string(GtMethod method) { return method == GtMethod::kManual ? "manual" : "otsu"; }

GtMethod parse_gt_method(std::string_view text) {
  if (text == "manual") return GtMethod::kManual;
  if (text == "otsu") return GtMethod::kOtsu;
  throw Error(ErrorCode::kInvalidArgument, "gt method must be manual or otsu, got '" + std::string(text) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_range(const LumaRange& r) { return std::to_string(r.lo) + ":" + std::to_string(r.hi); }

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.input_size == 0 || cfg.input_size % 16 != 0) {
    throw Error(ErrorCode::kInvalidParams, "input_size must be a positive multiple of 16");
  }
  if (cfg.batch_size == 0) throw Error(ErrorCode::kInvalidParams, "batch_size must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw Error(ErrorCode::kInvalidParams, "lr must be finite and >= 0");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "dropout_rate must lie in [0,1)");
  }
  validate(cfg.unet_config());
  validate(cfg.ranges);
}

void apply_setting(TrainConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "exposure") {
    cfg.exposure_class = parse_exposure_class(value);
  } else if (key == "gt") {
    cfg.gt_method = parse_gt_method(value);
  } else if (key == "loss") {
    cfg.loss = parse_loss_kind(value);
  } else if (key == "lr") {
    cfg.lr = parse_number<double>(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "input_size") {
    cfg.input_size = parse_number<std::size_t>(key, value);
  } else if (key == "channel_scale") {
    cfg.channel_scale = parse_number<std::size_t>(key, value);
  } else if (key == "dropout_rate") {
    cfg.dropout_rate = parse_number<double>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "input_channels") {
    cfg.input_channels = parse_number<std::size_t>(key, value);
  } else if (key == "low_range") {
    cfg.ranges.low_range = parse_luma_range(value);
  } else if (key == "high_range") {
    cfg.ranges.high_range = parse_luma_range(value);
  } else if (key == "focal_alpha") {
    cfg.focal.alpha = parse_number<double>(key, value);
  } else if (key == "focal_gamma") {
    cfg.focal.gamma = parse_number<double>(key, value);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(line_no) + " lacks '='");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(line_no) + " has no key");
    out[std::string(key)] = std::string(value);
  }
  return out;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  for (const auto& [key, value] : parse_key_values(buf.str())) apply_setting(base, key, value);
  return base;
}

std::map<std::string, std::string> config_settings(const TrainConfig& cfg) {
  return {
      {"exposure", std::string(to_string(cfg.exposure_class))},
      {"gt", std::string(to_string(cfg.gt_method))},
      {"loss", std::string(to_string(cfg.loss))},
      {"lr", format_double(cfg.lr)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"epochs", std::to_string(cfg.epochs)},
      {"input_size", std::to_string(cfg.input_size)},
      {"channel_scale", std::to_string(cfg.channel_scale)},
      {"dropout_rate", format_double(cfg.dropout_rate)},
      {"seed", std::to_string(cfg.seed)},
      {"input_channels", std::to_string(cfg.input_channels)},
      {"low_range", format_range(cfg.ranges.low_range)},
      {"high_range", format_range(cfg.ranges.high_range)},
      {"focal_alpha", format_double(cfg.focal.alpha)},
      {"focal_gamma", format_double(cfg.focal.gamma)},
  };
}

}  // namespace expomask
