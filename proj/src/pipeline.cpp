#include "expomask/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "expomask/adam.hpp"
#include "expomask/error.hpp"
#include "expomask/losses.hpp"

namespace expomask {

namespace fs = std::filesystem;

BinaryMask generate_mask(const LuminancePlane& plane, ExposureClass cls, GtMethod method,
                         const ThresholdRanges& ranges) {
  return method == GtMethod::kManual ? manual_mask(plane, cls, ranges) : otsu_mask(plane, cls);
}

Sample make_sample(const SceneEntry& entry, const TrainConfig& cfg) {
  const bool low = cfg.exposure_class == ExposureClass::kLow;
  const ImageU8 image = load_png(low ? entry.low : entry.high);
  const std::size_t s = cfg.input_size;

  Sample sample;
  sample.scene_id = entry.scene_id;

  const ImageU8 resized = resize_bilinear(image, s, s);
  sample.input = Tensor({1, s, s, cfg.input_channels});
  if (cfg.input_channels == resized.channels()) {
    for (std::size_t i = 0; i < resized.data().size(); ++i) sample.input[i] = resized.data()[i] / 255.0;
  } else if (cfg.input_channels == 1) {
    const auto plane = luminance(resized);
    for (std::size_t i = 0; i < plane.size(); ++i) sample.input[i] = plane.y[i] / 255.0;
  } else {
    // Gray source, RGB network: replicate the channel.
    for (std::size_t i = 0; i < resized.pixel_count(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) sample.input[3 * i + c] = resized.data()[i] / 255.0;
    }
  }

  const auto& gt_path = low ? entry.gt_low : entry.gt_high;
  if (gt_path) {
    sample.gt = mask_from_image(resize_nearest(load_png(*gt_path), s, s));
  } else {
    const LuminancePlane plane = luminance(resize_bilinear(to_image(luminance(image)), s, s));
    sample.gt = generate_mask(plane, cfg.exposure_class, cfg.gt_method, cfg.ranges);
  }
  return sample;
}

std::vector<Sample> build_training_set(const fs::path& root, const TrainConfig& cfg) {
  validate(cfg);
  const DatasetScan scan = scan_dataset(root);
  if (scan.scenes.empty()) throw Error(ErrorCode::kEmptyDataset, "no complete scenes under " + root.string());
  std::vector<Sample> samples;
  samples.reserve(scan.scenes.size());
  for (const auto& entry : scan.scenes) samples.push_back(make_sample(entry, cfg));
  return samples;
}

DatasetSplit split_dataset(std::vector<Sample> samples) {
  const std::size_t n_holdout = samples.size() / 5;
  DatasetSplit split;
  const auto cut = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() - n_holdout);
  split.holdout.assign(std::make_move_iterator(cut), std::make_move_iterator(samples.end()));
  samples.erase(cut, samples.end());
  split.train = std::move(samples);
  return split;
}

namespace {

// Stacks samples[order[begin..end)] along the batch axis.
std::pair<Tensor, Tensor> make_batch(const std::vector<Sample>& samples, const std::vector<std::size_t>& order,
                                     std::size_t begin, std::size_t end) {
  const Shape& in = samples[order[begin]].input.shape();
  const std::size_t b = end - begin;
  Tensor x({b, in[1], in[2], in[3]});
  Tensor y({b, in[1], in[2], 1});
  const std::size_t in_stride = in[1] * in[2] * in[3];
  const std::size_t gt_stride = in[1] * in[2];
  for (std::size_t k = 0; k < b; ++k) {
    const Sample& s = samples[order[begin + k]];
    if (s.input.shape() != in || s.gt.size() != gt_stride) {
      throw Error(ErrorCode::kShapeMismatch, "samples in a batch must share one size");
    }
    std::copy(s.input.values().begin(), s.input.values().end(), x.data() + k * in_stride);
    for (std::size_t i = 0; i < gt_stride; ++i) y[k * gt_stride + i] = s.gt.m[i];
  }
  return {std::move(x), std::move(y)};
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& holdout, const TrainConfig& cfg) {
  validate(cfg);
  if (train_set.empty()) throw Error(ErrorCode::kEmptyDataset, "training set is empty");
  const auto start = std::chrono::steady_clock::now();

  TrainResult result;
  result.params = init_params(cfg.unet_config(), cfg.seed);
  AdamHyper hyper;
  hyper.lr = cfg.lr;
  AdamState adam = make_adam_state(result.params, hyper);

  // Separate streams for shuffling and dropout keep each reproducible.
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0xd1b54a32d192ed03ULL);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto& report = result.report;
  report.config = cfg;
  report.epoch_losses.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      auto [x, y] = make_batch(train_set, order, begin, end);

      const NetMode mode = NetMode::train(cfg.dropout_rate, dropout_rng());
      const UNetTape tape = unet_forward_tape(result.params, x, mode);
      const LossResult loss = compute_loss(cfg.loss, y, tape.output, cfg.focal);
      if (!std::isfinite(loss.value)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      const UNetParams grads = unet_backward(result.params, tape, loss.grad);
      adam_step(result.params, grads, adam);
      weighted += loss.value * static_cast<double>(end - begin);
    }
    report.epoch_losses.push_back(weighted / static_cast<double>(order.size()));
  }

  const bool have_holdout = !holdout.empty();
  report.metrics_split = have_holdout ? "holdout" : "train";
  report.final_metrics =
      evaluate(result.params, have_holdout ? holdout : train_set, std::string(to_string(cfg.loss)));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ConfusionCounts sample_confusion(const UNetParams& params, const Sample& sample) {
  const Tensor prob = unet_forward(params, sample.input, NetMode::eval());
  return confusion(binarize(prob), sample.gt);
}

MetricRow evaluate(const UNetParams& params, const std::vector<Sample>& data, const std::string& loss_name,
                   MetricPooling pooling) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "nothing to evaluate");
  if (pooling == MetricPooling::kPooled) {
    ConfusionCounts total;
    for (const auto& s : data) total += sample_confusion(params, s);
    return metric_row(loss_name, total);
  }
  std::vector<MetricRow> rows;
  rows.reserve(data.size());
  for (const auto& s : data) rows.push_back(metric_row(loss_name, sample_confusion(params, s)));
  return mean_row(loss_name, rows);
}

std::vector<CoverageRow> compare_gt_methods(const fs::path& root, const ThresholdRanges& ranges) {
  validate(ranges);
  const DatasetScan scan = scan_dataset(root);
  std::vector<CoverageRow> rows;
  for (const auto& entry : scan.scenes) {
    const ExposureStack stack = load_stack(entry);
    const LuminancePlane low = luminance(stack.low);
    const LuminancePlane high = luminance(stack.high);
    for (GtMethod method : {GtMethod::kManual, GtMethod::kOtsu}) {
      const BinaryMask low_mask = generate_mask(low, ExposureClass::kLow, method, ranges);
      const BinaryMask high_mask = generate_mask(high, ExposureClass::kHigh, method, ranges);
      const std::string name(to_string(method));
      rows.push_back({entry.scene_id, name, "low", mask_coverage(low_mask)});
      rows.push_back({entry.scene_id, name, "high", mask_coverage(high_mask)});
      rows.push_back({entry.scene_id, name, "merged", mask_coverage(mask_union(low_mask, high_mask))});
      rows.push_back({entry.scene_id, name, "residual", mask_coverage(residual_mask(low_mask, high_mask))});
    }
  }
  return rows;
}

std::string format_coverage_csv(const std::vector<CoverageRow>& rows) {
  std::string out = "scene_id,method,exposure,coverage\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.coverage);
    out += r.scene_id + "," + r.method + "," + r.exposure + "," + buf + "\n";
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace expomask
