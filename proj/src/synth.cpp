#include "expomask/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "expomask/error.hpp"
#include "expomask/image_io.hpp"

namespace expomask {

namespace {

struct Blob {
  double row;
  double col;
  double sigma;
  double amplitude;
};

// Small per-channel colour tint so RGB scenes are not gray; the mean over
// channels is 1 so luminance tracks the scalar radiance.
constexpr std::array<double, 3> kTint{1.05, 1.0, 0.95};

}  // namespace

void validate(const SynthSceneParams& p) {
  if (p.height == 0 || p.width == 0) throw Error(ErrorCode::kInvalidParams, "scene size is zero");
  if (p.blob_count < 1) throw Error(ErrorCode::kInvalidParams, "blob_count must be >= 1");
  if (!(p.noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidParams, "noise_sigma must be >= 0");
  if (!(p.gamma > 0.0)) throw Error(ErrorCode::kInvalidParams, "gamma must be > 0");
  if (p.channels != 1 && p.channels != 3) {
    throw Error(ErrorCode::kInvalidParams, "channels must be 1 or 3");
  }
  const auto& s = p.exposure_scales;
  if (!(s[0] > 0.0) || !(s[0] < s[1]) || !(s[1] < s[2])) {
    throw Error(ErrorCode::kInvalidParams, "exposure_scales must be positive and strictly increasing");
  }
}

double exposure_response(double radiance, double scale, double gamma) {
  return std::clamp(255.0 * std::pow(scale * radiance, 1.0 / gamma), 0.0, 255.0);
}

SynthScene synth_stack(const SynthSceneParams& p) {
  validate(p);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto h = static_cast<double>(p.height);
  const auto w = static_cast<double>(p.width);
  const double extent = std::min(h, w);

  const double angle = 2.0 * std::numbers::pi * unit(rng);
  const double ramp_lo = 0.01 + 0.03 * unit(rng);
  const double ramp_span = 0.15 + 0.25 * unit(rng);

  std::vector<Blob> blobs(static_cast<std::size_t>(p.blob_count));
  for (auto& b : blobs) {
    b.row = h * unit(rng);
    b.col = w * unit(rng);
    b.sigma = extent * (0.06 + 0.16 * unit(rng));
    // Log-uniform amplitude spans regions that stay dark in the low exposure
    // up to regions that saturate it.
    b.amplitude = std::exp(std::log(0.3) + (std::log(3.0) - std::log(0.3)) * unit(rng));
  }

  Tensor radiance({p.height, p.width});
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  // Projection of the corners onto the ramp direction, for normalisation.
  const double proj_min = std::min(0.0, dx * (w - 1)) + std::min(0.0, dy * (h - 1));
  const double proj_max = std::max(0.0, dx * (w - 1)) + std::max(0.0, dy * (h - 1));
  const double proj_range = std::max(proj_max - proj_min, 1.0);
  for (std::size_t r = 0; r < p.height; ++r) {
    for (std::size_t c = 0; c < p.width; ++c) {
      const double rr = static_cast<double>(r);
      const double cc = static_cast<double>(c);
      double v = ramp_lo + ramp_span * ((dx * cc + dy * rr) - proj_min) / proj_range;
      for (const auto& b : blobs) {
        const double d2 = (rr - b.row) * (rr - b.row) + (cc - b.col) * (cc - b.col);
        v += b.amplitude * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
      }
      radiance[r * p.width + c] = v;
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  auto expose = [&](double scale) {
    ImageU8 img(p.width, p.height, p.channels);
    for (std::size_t r = 0; r < p.height; ++r) {
      for (std::size_t c = 0; c < p.width; ++c) {
        const double rad = radiance[r * p.width + c];
        for (std::size_t ch = 0; ch < p.channels; ++ch) {
          const double tint = p.channels == 3 ? kTint[ch] : 1.0;
          double v = exposure_response(rad * tint, scale, p.gamma);
          if (p.noise_sigma > 0.0) v += p.noise_sigma * noise(rng);
          img.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
        }
      }
    }
    return img;
  };

  SynthScene scene;
  scene.stack.scene_id = p.scene_id;
  scene.stack.low = expose(p.exposure_scales[0]);
  scene.stack.mid = expose(p.exposure_scales[1]);
  scene.stack.high = expose(p.exposure_scales[2]);
  scene.radiance = std::move(radiance);
  return scene;
}

std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index) {
  std::uint64_t x = dataset_seed + static_cast<std::uint64_t>(index);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void write_synth_dataset(const std::filesystem::path& root, std::size_t count, std::uint64_t dataset_seed,
                         const SynthSceneParams& base) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::kIoError, root.string() + ": " + ec.message());
  for (std::size_t i = 0; i < count; ++i) {
    SynthSceneParams p = base;
    p.seed = scene_seed(dataset_seed, i);
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%04zu", i);
    p.scene_id = id;
    write_stack(synth_stack(p).stack, root);
  }
}

}  // namespace expomask
