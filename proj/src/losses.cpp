#include "expomask/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "expomask/error.hpp"

namespace expomask {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kBce: return "bce";
    case LossKind::kFocal: return "focal";
    case LossKind::kDice: return "dice";
    case LossKind::kDiceBce: return "dice_bce";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "bce") return LossKind::kBce;
  if (text == "focal") return LossKind::kFocal;
  if (text == "dice") return LossKind::kDice;
  if (text == "dice_bce") return LossKind::kDiceBce;
  throw Error(ErrorCode::kInvalidArgument, "unknown loss '" + std::string(text) + "'");
}

namespace {

void check_inputs(const Tensor& y, const Tensor& y_hat, bool require_binary) {
  require_same_shape(y, y_hat, "loss inputs");
  if (!require_binary) return;
  for (double v : y.values()) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::kNonBinaryGroundTruth, "ground truth value " + std::to_string(v));
    }
  }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

LossResult bce(const Tensor& y, const Tensor& y_hat) {
  check_inputs(y, y_hat, true);
  const auto n = static_cast<double>(y.size());
  LossResult r{0.0, 0.0, Tensor(y.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(y_hat[i]);
    const double t = y[i];
    sum += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    r.grad[i] = (-(t * (1.0 / p)) + (1.0 - t) * (1.0 / (1.0 - p))) / n;
  }
  r.raw_sum = -sum;
  r.value = -sum / n;
  return r;
}

LossResult focal(const Tensor& y, const Tensor& y_hat, const FocalParams& fp) {
  check_inputs(y, y_hat, true);
  if (!(fp.alpha > 0.0 && fp.alpha < 1.0) || !(fp.gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "focal alpha must lie in (0,1) and gamma be >= 0");
  }
  const auto n = static_cast<double>(y.size());
  const double a = fp.alpha;
  const double g = fp.gamma;
  LossResult r{0.0, 0.0, Tensor(y.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(y_hat[i]);
    const double t = y[i];
    const double lp = std::log(p);
    const double lq = std::log(1.0 - p);
    const double wq = std::pow(1.0 - p, g);  // (1 - p)^gamma
    const double wp = std::pow(p, g);        // p^gamma
    sum += a * t * wq * lp + (1.0 - a) * (1.0 - t) * wp * lq;

    // d/dp of each bracketed term; the gamma = 0 case skips the pow(., -1).
    const double dq = g == 0.0 ? 0.0 : -g * std::pow(1.0 - p, g - 1.0) * lp;
    const double dp = g == 0.0 ? 0.0 : g * std::pow(p, g - 1.0) * lq;
    const double d_pos = a * (t * (dq + wq * (1.0 / p)));
    const double d_neg = (1.0 - a) * ((1.0 - t) * (dp - wp * (1.0 / (1.0 - p))));
    r.grad[i] = -(d_pos + d_neg) / n;
  }
  r.raw_sum = -sum;
  r.value = -sum / n;
  return r;
}

LossResult dice_loss(const Tensor& y, const Tensor& y_hat) {
  check_inputs(y, y_hat, false);
  const std::size_t items = y.rank() == 4 ? y.dim(0) : 1;
  const std::size_t per_item = y.size() / items;
  const auto batch = static_cast<double>(items);

  LossResult r{0.0, 0.0, Tensor(y.shape())};
  for (std::size_t b = 0; b < items; ++b) {
    const std::size_t base = b * per_item;
    double s_y = 0.0, s_p = 0.0, s_yp = 0.0;
    for (std::size_t i = base; i < base + per_item; ++i) {
      s_y += y[i];
      s_p += y_hat[i];
      s_yp += y[i] * y_hat[i];
    }
    const double num = 2.0 * s_yp + 1.0;
    const double den = s_y + s_p + 1.0;
    const double item_loss = 1.0 - num / den;
    r.raw_sum += item_loss;
    for (std::size_t i = base; i < base + per_item; ++i) {
      r.grad[i] = -(2.0 * y[i] * den - num) / (den * den) / batch;
    }
  }
  r.value = r.raw_sum / batch;
  return r;
}

LossResult dice_bce(const Tensor& y, const Tensor& y_hat) {
  LossResult b = bce(y, y_hat);
  const LossResult d = dice_loss(y, y_hat);
  b.value += d.value;
  b.raw_sum += d.raw_sum;
  b.grad += d.grad;
  return b;
}

LossResult compute_loss(LossKind kind, const Tensor& y, const Tensor& y_hat, const FocalParams& focal_params) {
  switch (kind) {
    case LossKind::kBce: return bce(y, y_hat);
    case LossKind::kFocal: return focal(y, y_hat, focal_params);
    case LossKind::kDice: return dice_loss(y, y_hat);
    case LossKind::kDiceBce: return dice_bce(y, y_hat);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown loss kind");
}

}  // namespace expomask
