#include "expomask/metrics.hpp"

#include <cstdio>

#include "expomask/error.hpp"

namespace expomask {

BinaryMask binarize(const Tensor& probabilities, double threshold) {
  std::size_t h = 0, w = 0;
  if (probabilities.rank() == 4 && probabilities.dim(0) == 1 && probabilities.dim(3) == 1) {
    h = probabilities.dim(1);
    w = probabilities.dim(2);
  } else if (probabilities.rank() == 2) {
    h = probabilities.dim(0);
    w = probabilities.dim(1);
  } else {
    throw Error(ErrorCode::kShapeMismatch, "binarize expects [H,W] or [1,H,W,1], got " +
                                               shape_string(probabilities.shape()));
  }
  BinaryMask mask(w, h);
  for (std::size_t i = 0; i < mask.size(); ++i) mask.m[i] = probabilities[i] >= threshold ? 1 : 0;
  return mask;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (!pred.same_geometry(gt)) {
    throw Error(ErrorCode::kDimensionMismatch, "confusion of masks with different sizes");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.m[i] != 0;
    const bool g = gt.m[i] != 0;
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

double ratio_or_one(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

double rate_or_zero(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double dice_index(const ConfusionCounts& c) { return ratio_or_one(2 * c.tp, 2 * c.tp + c.fp + c.fn); }

double jaccard_index(const ConfusionCounts& c) { return ratio_or_one(c.tp, c.tp + c.fp + c.fn); }

double sensitivity(const ConfusionCounts& c) { return ratio_or_one(c.tp, c.tp + c.fn); }

double specificity(const ConfusionCounts& c) { return ratio_or_one(c.tn, c.tn + c.fp); }

double auc_balanced(const ConfusionCounts& c) {
  return 1.0 - 0.5 * (rate_or_zero(c.fp, c.fp + c.tn) + rate_or_zero(c.fn, c.fn + c.tp));
}

double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "roc_auc score/label length mismatch");
  }
  std::uint64_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  const std::uint64_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return 1.0;

  // Thresholds descend from 1 to 0 so the curve runs from (0,0) to (1,1).
  double area = 0.0;
  double prev_tpr = 0.0, prev_fpr = 0.0;
  for (int k = 256; k >= 0; --k) {
    const double thr = k == 256 ? 1.0 + 1e-12 : static_cast<double>(k) / 255.0;
    const double cut = k == 0 ? -1.0 : thr;
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= cut) (labels[i] ? tp : fp) += 1;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    area += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

MetricRow metric_row(std::string loss_name, const ConfusionCounts& c) {
  MetricRow r;
  r.loss_name = std::move(loss_name);
  r.dice = dice_index(c);
  r.jaccard = jaccard_index(c);
  r.sensitivity = sensitivity(c);
  r.specificity = specificity(c);
  r.auc = auc_balanced(c);
  r.avg = (r.dice + r.jaccard + r.sensitivity + r.specificity + r.auc) / 5.0;
  return r;
}

MetricRow mean_row(std::string loss_name, const std::vector<MetricRow>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "mean of zero metric rows");
  MetricRow m;
  m.loss_name = std::move(loss_name);
  for (const auto& r : rows) {
    m.dice += r.dice;
    m.jaccard += r.jaccard;
    m.sensitivity += r.sensitivity;
    m.specificity += r.specificity;
    m.auc += r.auc;
  }
  const auto n = static_cast<double>(rows.size());
  m.dice /= n;
  m.jaccard /= n;
  m.sensitivity /= n;
  m.specificity /= n;
  m.auc /= n;
  m.avg = (m.dice + m.jaccard + m.sensitivity + m.specificity + m.auc) / 5.0;
  return m;
}

std::string format_row(const MetricRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", row.loss_name.c_str(), row.dice,
                row.jaccard, row.sensitivity, row.specificity, row.auc, row.avg);
  return buf;
}

std::string format_report(const std::vector<MetricRow>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  return out;
}

}  // namespace expomask
