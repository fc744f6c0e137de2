#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "expomask/config.hpp"
#include "expomask/image_io.hpp"
#include "expomask/metrics.hpp"
#include "expomask/unet.hpp"

namespace expomask {

struct Sample {
  std::string scene_id;
  Tensor input;  // [1, S, S, C], values in [0,1]
  BinaryMask gt;  // S x S
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> holdout;
};

// Picks the image of cfg.exposure_class, resizes it bilinearly to
// input_size x input_size and scales to [0,1]. A gt_<class>.png in the scene
// is loaded and nearest-resized; otherwise the mask is generated by
// cfg.gt_method from the luminance plane after bilinear resizing.
Sample make_sample(const SceneEntry& entry, const TrainConfig& cfg);
std::vector<Sample> build_training_set(const std::filesystem::path& root, const TrainConfig& cfg);

// Deterministic split: the last floor(n/5) samples in scene order are held out.
DatasetSplit split_dataset(std::vector<Sample> samples);

struct TrainReport {
  std::vector<double> epoch_losses;
  MetricRow final_metrics;
  std::string metrics_split;  // "holdout", or "train" when nothing was held out
  double wall_seconds = 0.0;
  TrainConfig config;
};

struct TrainResult {
  UNetParams params;
  TrainReport report;
};

// Seeded shuffle per epoch, Train-mode forward, loss, backward, Adam. Throws
// kEmptyDataset for no data and kNonFiniteLoss naming the epoch and batch.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& holdout,
                  const TrainConfig& cfg);

enum class MetricPooling { kPooled, kPerImageMean };

// Eval-mode forward, binarize at 0.5, pooled confusion counts over all pixels
// of all samples (or per-image metrics averaged, on request).
MetricRow evaluate(const UNetParams& params, const std::vector<Sample>& data, const std::string& loss_name,
                   MetricPooling pooling = MetricPooling::kPooled);

ConfusionCounts sample_confusion(const UNetParams& params, const Sample& sample);

struct CoverageRow {
  std::string scene_id;
  std::string method;    // manual | otsu
  std::string exposure;  // low | high | merged | residual
  double coverage = 0.0;
};

// Coverage of the manual and Otsu masks per scene at native resolution; merged
// is low OR high, residual the pixels in neither.
std::vector<CoverageRow> compare_gt_methods(const std::filesystem::path& root, const ThresholdRanges& ranges = {});
std::string format_coverage_csv(const std::vector<CoverageRow>& rows);

BinaryMask generate_mask(const LuminancePlane& plane, ExposureClass cls, GtMethod method,
                         const ThresholdRanges& ranges);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace expomask
