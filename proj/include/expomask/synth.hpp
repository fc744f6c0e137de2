#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "expomask/image.hpp"
#include "expomask/tensor.hpp"

namespace expomask {

// Parameters of the synthetic multi-exposure scene generator.
struct SynthSceneParams {
  std::size_t height = 64;
  std::size_t width = 64;
  int blob_count = 6;
  double noise_sigma = 2.0;  // in 8-bit sample units
  std::array<double, 3> exposure_scales{0.25, 1.0, 4.0};  // low, mid, high
  double gamma = 2.2;
  std::uint64_t seed = 0;
  std::size_t channels = 3;
  std::string scene_id = "scene";
};

struct SynthScene {
  ExposureStack stack;
  Tensor radiance;  // [H, W], strictly positive
};

// Throws kInvalidParams on zero size, blob_count < 1, negative noise,
// non-positive gamma or scales that are not strictly increasing.
void validate(const SynthSceneParams& params);

// Radiance is a linear ramp plus Gaussian blobs (per-channel tinted for RGB
// output). Exposure e maps radiance r to clip(255 * (scale_e * r)^(1/gamma)),
// then adds Gaussian noise, re-clips and rounds. Pure in `params`.
SynthScene synth_stack(const SynthSceneParams& params);

// Pre-noise sample value for a radiance under one exposure scale; exposed for
// monotonicity checks.
double exposure_response(double radiance, double scale, double gamma);

// Per-scene seed derived from a dataset seed (splitmix64 of seed + index).
std::uint64_t scene_seed(std::uint64_t dataset_seed, std::size_t index);

// Writes `count` scenes named scene_0000, scene_0001, ... under `root`, each
// generated from `base` with its own scene_seed().
void write_synth_dataset(const std::filesystem::path& root, std::size_t count, std::uint64_t dataset_seed,
                         const SynthSceneParams& base = {});

}  // namespace expomask
