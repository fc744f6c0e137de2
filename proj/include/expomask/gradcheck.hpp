#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "expomask/tensor.hpp"

namespace expomask {

struct GradCheckOptions {
  std::size_t channel_scale = 8;
  std::size_t image_size = 16;
  std::size_t unet_samples = 152;  // parameters probed in the full-network check
  double layer_step = 1e-5;
  double layer_tolerance = 1e-4;
  double loss_step = 1e-6;
  double loss_tolerance = 1e-6;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  std::size_t probes = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// |a - b| / max(|a|, |b|, kGradCheckFloor); the floor keeps round-off on
// vanishing gradients from reading as a large relative error.
inline constexpr double kGradCheckFloor = 1e-6;
double relative_error(double a, double b);

// Central difference (f(x+h) - f(x-h)) / 2h of a scalar function of one
// coordinate of `x`, restoring the coordinate afterwards.
double central_difference(const std::function<double()>& f, double& coordinate, double step);

// Finite-difference checks of every layer kernel, every loss and the full
// U-Net at toy scale (Eval mode).
std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& options = {});

}  // namespace expomask
