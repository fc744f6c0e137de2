#include "expomask/adam.hpp"

#include <cmath>

#include "expomask/error.hpp"

namespace expomask {

AdamState make_adam_state(const UNetParams& params, const AdamHyper& hyper) {
  AdamState s;
  s.hyper = hyper;
  s.m = zero_params(params.config);
  s.v = zero_params(params.config);
  return s;
}

void adam_step(UNetParams& params, const UNetParams& grads, AdamState& state) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    require_same_shape(*p[i], *g[i], "adam_step gradient");
    require_same_shape(*p[i], *m[i], "adam_step moment");
  }

  const auto& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto pv = p[i]->values();
    const auto gv = g[i]->values();
    auto mv = m[i]->values();
    auto vv = v[i]->values();
    for (std::size_t k = 0; k < pv.size(); ++k) {
      mv[k] = h.beta1 * mv[k] + (1.0 - h.beta1) * gv[k];
      vv[k] = h.beta2 * vv[k] + (1.0 - h.beta2) * gv[k] * gv[k];
      const double m_hat = mv[k] / correction1;
      const double v_hat = vv[k] / correction2;
      pv[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

}  // namespace expomask
