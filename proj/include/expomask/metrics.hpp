#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "expomask/mask.hpp"
#include "expomask/tensor.hpp"

namespace expomask {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// 1 where value >= threshold. Rank-4 input must have batch 1 and one channel;
// rank-2 input is read as [H, W].
BinaryMask binarize(const Tensor& probabilities, double threshold = 0.5);

// Throws kDimensionMismatch when sizes differ.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// Empty-denominator conventions make every metric 1.0 when pred == gt.
double dice_index(const ConfusionCounts& c);
double jaccard_index(const ConfusionCounts& c);
double sensitivity(const ConfusionCounts& c);
double specificity(const ConfusionCounts& c);
// Single-threshold balanced accuracy: 1 - (FPR + FNR) / 2.
double auc_balanced(const ConfusionCounts& c);

// Area under the ROC curve of soft predictions, trapezoidal over 256 evenly
// spaced thresholds. Diagnostic only; never part of MetricRow.
double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

struct MetricRow {
  std::string loss_name;
  double dice = 0.0;
  double jaccard = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc = 0.0;
  double avg = 0.0;
};

MetricRow metric_row(std::string loss_name, const ConfusionCounts& c);
// Arithmetic mean of each metric over rows; avg recomputed from the means.
MetricRow mean_row(std::string loss_name, const std::vector<MetricRow>& rows);

inline constexpr const char* kReportHeader = "loss,dice,jaccard,sensitivity,specificity,auc,avg";
std::string format_row(const MetricRow& row);
std::string format_report(const std::vector<MetricRow>& rows);

}  // namespace expomask
