#pragma once

#include <cstdint>

#include "expomask/unet.hpp"

namespace expomask {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  UNetParams m;  // first moments
  UNetParams v;  // second moments
  std::uint64_t t = 0;
};

AdamState make_adam_state(const UNetParams& params, const AdamHyper& hyper = {});

// One bias-corrected Adam update applied in place; increments state.t.
void adam_step(UNetParams& params, const UNetParams& grads, AdamState& state);

}  // namespace expomask
