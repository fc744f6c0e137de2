#include <algorithm>
#include <fstream>
#include <random>

#include "expomask/pipeline.hpp"
#include "expomask/synth.hpp"
#include "test_util.hpp"

using namespace expomask;
using testutil::TempDir;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.input_size = 16;
  cfg.channel_scale = 8;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 3;
  return cfg;
}

void make_dataset(const std::filesystem::path& root, std::size_t count, std::size_t size, std::uint64_t seed) {
  SynthSceneParams p;
  p.height = size;
  p.width = size;
  write_synth_dataset(root, count, seed, p);
}

Sample all_ones_sample(std::size_t s) {
  return Sample{"ones", Tensor({1, s, s, 3}, 0.5), BinaryMask(s, s, 1)};
}

}  // namespace

TEST(Samples, OnePerScene) {
  TempDir dir("samples");
  make_dataset(dir.path(), 3, 40, 1);
  const TrainConfig cfg = tiny_config();
  const auto samples = build_training_set(dir.path(), cfg);
  ASSERT_EQ(samples.size(), 3u);
  for (const Sample& s : samples) {
    EXPECT_EQ(s.input.shape(), (Shape{1, 16, 16, 3}));
    EXPECT_EQ(s.gt.size(), 256u);
    for (double v : s.input.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(samples[0].scene_id, "scene_0000");
}

TEST(Samples, EmptyDatasetRejected) {
  TempDir dir("emptyds");
  EXPECT_ERROR_CODE(build_training_set(dir.path(), tiny_config()), ErrorCode::kEmptyDataset);
}

TEST(Samples, GroundTruthFileIsPreferred) {
  TempDir dir("gtfile");
  make_dataset(dir.path(), 1, 32, 2);
  const SceneEntry entry = scan_dataset(dir.path()).scenes.at(0);
  // A checkerboard cannot come out of either thresholding method.
  ImageU8 gt(32, 32, 1);
  for (std::size_t r = 0; r < 32; ++r)
    for (std::size_t c = 0; c < 32; ++c) gt.at(r, c) = ((r / 2 + c / 2) % 2) ? 255 : 0;
  save_png(gt, entry.dir / "gt_low.png");
  const SceneEntry with_gt = scan_dataset(dir.path()).scenes.at(0);
  const Sample s = make_sample(with_gt, tiny_config());
  EXPECT_EQ(s.gt, mask_from_image(resize_nearest(gt, 16, 16)));
}

TEST(Samples, RegeneratedManualMaskMatchesDirectCall) {
  TempDir dir("manualgt");
  make_dataset(dir.path(), 2, 48, 3);
  TrainConfig cfg = tiny_config();
  cfg.input_size = 48;
  for (ExposureClass cls : {ExposureClass::kLow, ExposureClass::kHigh}) {
    cfg.exposure_class = cls;
    for (const SceneEntry& e : scan_dataset(dir.path()).scenes) {
      const ExposureStack st = load_stack(e);
      const ImageU8& img = cls == ExposureClass::kLow ? st.low : st.high;
      EXPECT_EQ(make_sample(e, cfg).gt, manual_mask(luminance(img), cls));
    }
  }
}

TEST(Split, LastFifthHeldOut) {
  std::vector<Sample> v;
  for (int i = 0; i < 11; ++i) v.push_back(Sample{std::to_string(i), Tensor({1}), BinaryMask(1, 1)});
  const DatasetSplit s = split_dataset(v);
  ASSERT_EQ(s.holdout.size(), 2u);
  EXPECT_EQ(s.train.size(), 9u);
  EXPECT_EQ(s.holdout[0].scene_id, "9");
  v.resize(4);
  EXPECT_TRUE(split_dataset(v).holdout.empty());
}

TEST(Train, ZeroLearningRateKeepsInit) {
  TempDir dir("lr0");
  make_dataset(dir.path(), 2, 16, 4);
  TrainConfig cfg = tiny_config();
  cfg.lr = 0.0;
  const auto data = build_training_set(dir.path(), cfg);
  const TrainResult r = train(data, {}, cfg);
  EXPECT_EQ(r.params, init_params(cfg.unet_config(), cfg.seed));
  EXPECT_EQ(r.report.epoch_losses.size(), cfg.epochs);
  EXPECT_EQ(r.report.metrics_split, "train");
}

TEST(Train, DeterministicForSeed) {
  TempDir dir("det");
  make_dataset(dir.path(), 3, 16, 5);
  const TrainConfig cfg = tiny_config();
  const auto data = build_training_set(dir.path(), cfg);
  const TrainResult a = train(data, {data[2]}, cfg);
  const TrainResult b = train(data, {data[2]}, cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.report.epoch_losses, b.report.epoch_losses);
  EXPECT_EQ(a.report.metrics_split, "holdout");
  TrainConfig other = cfg;
  other.seed = 4;
  EXPECT_NE(train(data, {}, other).params, a.params);
}

TEST(Train, RejectsEmptyAndBadConfig) {
  EXPECT_ERROR_CODE(train({}, {}, tiny_config()), ErrorCode::kEmptyDataset);
  TrainConfig cfg = tiny_config();
  cfg.input_size = 24;
  EXPECT_ERROR_CODE(train({all_ones_sample(16)}, {}, cfg), ErrorCode::kInvalidParams);
}

TEST(Evaluate, ConstantOnePredictionOnAllOnesGroundTruth) {
  UNetParams p = zero_params(UNetConfig{3, 8});
  p.head.bias[0] = 30.0;
  const MetricRow r = evaluate(p, {all_ones_sample(16), all_ones_sample(16)}, "bce");
  EXPECT_EQ(r.dice, 1.0);
  EXPECT_EQ(r.jaccard, 1.0);
  EXPECT_EQ(r.sensitivity, 1.0);
  EXPECT_EQ(r.specificity, 1.0);
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.avg, 1.0);
  EXPECT_ERROR_CODE(evaluate(p, {}, "bce"), ErrorCode::kEmptyDataset);
}

TEST(Evaluate, PooledEqualsIndependentLoopAndIgnoresOrder) {
  TempDir dir("evalpool");
  make_dataset(dir.path(), 5, 16, 6);
  const TrainConfig cfg = tiny_config();
  auto data = build_training_set(dir.path(), cfg);
  const UNetParams p = init_params(cfg.unet_config(), 11);
  ConfusionCounts total;
  for (const Sample& s : data) {
    const BinaryMask pred = binarize(unet_forward(p, s.input, NetMode::eval()));
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred.m[i] && s.gt.m[i]) ++total.tp;
      if (pred.m[i] && !s.gt.m[i]) ++total.fp;
      if (!pred.m[i] && !s.gt.m[i]) ++total.tn;
      if (!pred.m[i] && s.gt.m[i]) ++total.fn;
    }
  }
  const MetricRow pooled = evaluate(p, data, "x");
  const MetricRow expected = metric_row("x", total);
  EXPECT_EQ(format_row(pooled), format_row(expected));
  EXPECT_EQ(pooled.dice, expected.dice);
  std::reverse(data.begin(), data.end());
  EXPECT_EQ(evaluate(p, data, "x").avg, pooled.avg);
}

TEST(Evaluate, PerImageMeanOfSingleImageEqualsPooled) {
  TempDir dir("evalper");
  make_dataset(dir.path(), 1, 16, 7);
  const TrainConfig cfg = tiny_config();
  const auto data = build_training_set(dir.path(), cfg);
  const UNetParams p = init_params(cfg.unet_config(), 12);
  const MetricRow a = evaluate(p, data, "x", MetricPooling::kPooled);
  const MetricRow b = evaluate(p, data, "x", MetricPooling::kPerImageMean);
  EXPECT_EQ(a.dice, b.dice);
  EXPECT_EQ(a.specificity, b.specificity);
}

TEST(CompareGt, AllBlackLowImage) {
  TempDir dir("black");
  ExposureStack st{ImageU8(8, 8, 3, 0), ImageU8(8, 8, 3, 0), ImageU8(8, 8, 3, 0), "dark"};
  write_stack(st, dir.path());
  const auto rows = compare_gt_methods(dir.path());
  auto find = [&](const std::string& method, const std::string& exposure) {
    return std::find_if(rows.begin(), rows.end(), [&](const CoverageRow& r) {
      return r.method == method && r.exposure == exposure;
    })->coverage;
  };
  EXPECT_EQ(find("manual", "low"), 0.0);
  EXPECT_EQ(find("manual", "high"), 1.0);
  EXPECT_EQ(find("manual", "residual"), 0.0);
  EXPECT_EQ(rows.size(), 8u);
}

TEST(CompareGt, MatchesDirectCallsOnFiftyStacks) {
  TempDir dir("cmp50");
  make_dataset(dir.path(), 50, 24, 8);
  const auto rows = compare_gt_methods(dir.path());
  ASSERT_EQ(rows.size(), 50u * 8u);
  const auto scenes = scan_dataset(dir.path()).scenes;
  std::size_t k = 0;
  for (const SceneEntry& e : scenes) {
    const ExposureStack st = load_stack(e);
    for (GtMethod m : {GtMethod::kManual, GtMethod::kOtsu}) {
      const BinaryMask lo = generate_mask(luminance(st.low), ExposureClass::kLow, m, {});
      const BinaryMask hi = generate_mask(luminance(st.high), ExposureClass::kHigh, m, {});
      const double expected[] = {mask_coverage(lo), mask_coverage(hi), mask_coverage(mask_union(lo, hi)),
                                 mask_coverage(residual_mask(lo, hi))};
      for (double v : expected) {
        ASSERT_EQ(rows[k].scene_id, e.scene_id);
        ASSERT_EQ(rows[k].method, std::string(to_string(m)));
        ASSERT_EQ(rows[k].coverage, v) << rows[k].exposure;
        ++k;
      }
    }
  }
  const std::string csv = format_coverage_csv(rows);
  EXPECT_EQ(csv.rfind("scene_id,method,exposure,coverage\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 401);
}

TEST(Config, KeyValueParsingAndOverrides) {
  TempDir dir("cfg");
  const auto path = dir.path() / "train.cfg";
  std::ofstream(path) << "# overfit run\nloss = focal\nepochs=7\n\nlr = 0.01  # faster\nlow_range = 100:250\n";
  const TrainConfig cfg = load_config(path);
  EXPECT_EQ(cfg.loss, LossKind::kFocal);
  EXPECT_EQ(cfg.epochs, 7u);
  EXPECT_DOUBLE_EQ(cfg.lr, 0.01);
  EXPECT_EQ(cfg.ranges.low_range, (LumaRange{100, 250}));
  EXPECT_EQ(cfg.batch_size, 4u);

  TrainConfig back;
  for (const auto& [k, v] : config_settings(cfg)) apply_setting(back, k, v);
  EXPECT_EQ(config_settings(back), config_settings(cfg));

  TrainConfig bad;
  EXPECT_ERROR_CODE(apply_setting(bad, "colour", "red"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(apply_setting(bad, "epochs", "ten"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(parse_key_values("just words\n"), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(load_config(dir.path() / "missing.cfg"), ErrorCode::kFileNotFound);
  bad.dropout_rate = 1.0;
  EXPECT_ERROR_CODE(validate(bad), ErrorCode::kInvalidParams);
}
