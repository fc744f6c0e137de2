#pragma once

#include <string_view>

#include "expomask/tensor.hpp"

namespace expomask {

enum class LossKind { kBce, kFocal, kDice, kDiceBce };

std::string_view to_string(LossKind kind);
// Accepts "bce", "focal", "dice_bce" and "dice".
LossKind parse_loss_kind(std::string_view text);

// Predictions are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

struct LossResult {
  double value = 0.0;    // mean-reduced loss used for training
  double raw_sum = 0.0;  // sum over pixels instead of the mean (per-item sum for dice)
  Tensor grad;           // dL/dy_hat for `value`
};

// y holds ground truth in {0,1} (kNonBinaryGroundTruth otherwise), y_hat the
// predicted probabilities; shapes must match (kShapeMismatch).
LossResult bce(const Tensor& y, const Tensor& y_hat);
LossResult focal(const Tensor& y, const Tensor& y_hat, const FocalParams& params = {});

// Smoothed Dice loss 1 - (2 sum(y y_hat) + 1) / (sum y + sum y_hat + 1). Rank-4
// inputs are treated per batch item and averaged; other ranks form one item.
LossResult dice_loss(const Tensor& y, const Tensor& y_hat);

LossResult dice_bce(const Tensor& y, const Tensor& y_hat);

LossResult compute_loss(LossKind kind, const Tensor& y, const Tensor& y_hat, const FocalParams& focal_params = {});

}  // namespace expomask
