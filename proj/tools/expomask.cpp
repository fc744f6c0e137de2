// expomask: synthetic exposure stacks, ground-truth masks, U-Net training
// and evaluation from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "expomask/config.hpp"
#include "expomask/error.hpp"
#include "expomask/gradcheck.hpp"
#include "expomask/gtgen.hpp"
#include "expomask/image_io.hpp"
#include "expomask/model_io.hpp"
#include "expomask/pipeline.hpp"
#include "expomask/synth.hpp"

namespace fs = std::filesystem;
using namespace expomask;

namespace {

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const auto s = std::stoul(text);
      return {s, s};
    }
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "size must look like HxW, got '" + text + "'");
  }
}

int run_synth(const std::string& out, int count, const std::string& size, std::uint64_t seed,
              const SynthSceneParams& base) {
  const auto [h, w] = parse_size(size);
  SynthSceneParams p = base;
  p.height = h;
  p.width = w;
  write_synth_dataset(out, static_cast<std::size_t>(count), seed, p);
  std::cout << "wrote " << count << " scenes to " << out << "\n";
  return 0;
}

int run_gt(const std::string& data, const std::string& method_text, const std::string& exposure,
           const ThresholdRanges& ranges) {
  const GtMethod method = parse_gt_method(method_text);
  const DatasetScan scan = scan_dataset(data);
  for (const auto& w : scan.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& entry : scan.scenes) {
    if (exposure == "mid") {
      const ExposureStack stack = load_stack(entry);
      const auto low = generate_mask(luminance(stack.low), ExposureClass::kLow, method, ranges);
      const auto high = generate_mask(luminance(stack.high), ExposureClass::kHigh, method, ranges);
      save_png(mask_to_image(residual_mask(low, high)), entry.dir / "gt_mid.png");
      continue;
    }
    const ExposureClass cls = parse_exposure_class(exposure);
    const ImageU8 image = load_png(cls == ExposureClass::kLow ? entry.low : entry.high);
    const BinaryMask mask = generate_mask(luminance(image), cls, method, ranges);
    save_png(mask_to_image(mask), entry.dir / (cls == ExposureClass::kLow ? "gt_low.png" : "gt_high.png"));
  }
  std::cout << "wrote gt_" << exposure << ".png for " << scan.scenes.size() << " scenes\n";
  return 0;
}

int run_compare(const std::string& data, const std::string& out, const ThresholdRanges& ranges) {
  const auto rows = compare_gt_methods(data, ranges);
  write_text_file(out, format_coverage_csv(rows));
  std::cout << "wrote " << rows.size() << " coverage rows to " << out << "\n";
  return 0;
}

struct TrainFlags {
  std::string data;
  std::string model_out;
  std::optional<std::string> config_file;
  std::optional<std::string> history;
  // Each set flag overrides the config file.
  std::map<std::string, std::string> overrides;
};

int run_train(const TrainFlags& flags) {
  TrainConfig cfg;
  if (flags.config_file) cfg = load_config(*flags.config_file, cfg);
  for (const auto& [key, value] : flags.overrides) apply_setting(cfg, key, value);
  validate(cfg);

  DatasetSplit split = split_dataset(build_training_set(flags.data, cfg));
  std::cerr << "training " << to_string(cfg.exposure_class) << "-exposure model, loss " << to_string(cfg.loss)
            << ", " << split.train.size() << " train / " << split.holdout.size() << " held out\n";
  const TrainResult result = train(split.train, split.holdout, cfg);

  auto meta = config_settings(cfg);
  std::map<std::string, std::string> model_meta;
  for (const auto& [key, value] : meta) model_meta["train." + key] = value;
  save_model(flags.model_out, result.params, model_meta);

  const auto& report = result.report;
  if (flags.history) {
    std::string csv = "epoch,loss\n";
    char buf[64];
    for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", e + 1, report.epoch_losses[e]);
      csv += buf;
    }
    write_text_file(*flags.history, csv);
  }
  std::cout << "final loss " << report.epoch_losses.back() << "\n"
            << "metrics (" << report.metrics_split << ")\n"
            << kReportHeader << "\n"
            << format_row(report.final_metrics) << "\n";
  std::cerr << "wall time " << report.wall_seconds << " s\n";
  return 0;
}

TrainConfig config_from_model(const ModelFile& model) {
  TrainConfig cfg;
  for (const auto& [key, value] : model.metadata) {
    if (key.rfind("train.", 0) == 0) apply_setting(cfg, key.substr(6), value);
  }
  if (!(cfg.unet_config() == model.params.config)) {
    throw Error(ErrorCode::kModelFormat, "model metadata disagrees with its architecture");
  }
  return cfg;
}

int run_eval(const std::string& data, const std::vector<std::string>& models, const std::string& report_path,
             const std::string& split_name, bool per_image) {
  std::vector<MetricRow> rows;
  for (const auto& path : models) {
    const ModelFile model = load_model(path);
    const TrainConfig cfg = config_from_model(model);
    std::vector<Sample> samples = build_training_set(data, cfg);
    if (split_name != "all") {
      DatasetSplit split = split_dataset(std::move(samples));
      if (split_name == "train") {
        samples = std::move(split.train);
      } else if (split_name == "holdout") {
        samples = std::move(split.holdout);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "split must be all, train or holdout");
      }
    }
    rows.push_back(evaluate(model.params, samples, std::string(to_string(cfg.loss)),
                            per_image ? MetricPooling::kPerImageMean : MetricPooling::kPooled));
  }
  const std::string csv = format_report(rows);
  write_text_file(report_path, csv);
  std::cout << csv;
  return 0;
}

int run_gradcheck(std::size_t scale, std::size_t samples) {
  GradCheckOptions options;
  options.channel_scale = scale;
  options.unet_samples = samples;
  bool ok = true;
  for (const auto& r : run_gradcheck(options)) {
    std::printf("%-4s %-18s probes=%-5zu max_rel_err=%.3e tol=%.0e\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.probes, r.max_rel_error, r.tolerance);
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Well-exposed region masks for multi-exposure stacks"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate synthetic exposure stacks");
  std::string synth_out, synth_size = "64x64";
  int synth_count = 4;
  std::uint64_t synth_seed = 0;
  SynthSceneParams synth_params;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--count", synth_count, "Number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "Scene size HxW");
  synth->add_option("--seed", synth_seed, "Base seed");
  synth->add_option("--blobs", synth_params.blob_count, "Gaussian blobs per scene");
  synth->add_option("--noise", synth_params.noise_sigma, "Noise sigma in 8-bit units");
  synth->add_option("--gamma", synth_params.gamma, "Display gamma");
  synth->add_option("--channels", synth_params.channels, "1 or 3");

  std::string low_range = "120:255", high_range = "0:200";
  auto add_ranges = [&](CLI::App* cmd) {
    cmd->add_option("--low-range", low_range, "Inclusive luma range A:B for low exposures");
    cmd->add_option("--high-range", high_range, "Inclusive luma range A:B for high exposures");
  };

  auto* gt = app.add_subcommand("gt", "Write ground-truth masks into each scene");
  std::string gt_method, gt_exposure, gt_data;
  gt->add_option("--method", gt_method, "manual or otsu")->required();
  gt->add_option("--exposure", gt_exposure, "low, high, or mid (residual of both)")->required();
  gt->add_option("--data", gt_data, "Dataset directory")->required();
  add_ranges(gt);

  auto* compare = app.add_subcommand("compare-gt", "Coverage of manual vs Otsu masks per scene");
  std::string compare_data, compare_out;
  compare->add_option("--data", compare_data, "Dataset directory")->required();
  compare->add_option("--out", compare_out, "Output CSV")->required();
  add_ranges(compare);

  auto* train_cmd = app.add_subcommand("train", "Train a U-Net for one exposure class");
  TrainFlags tf;
  train_cmd->add_option("--data", tf.data, "Dataset directory")->required();
  train_cmd->add_option("--model-out", tf.model_out, "Model file to write")->required();
  train_cmd->add_option("--config", tf.config_file, "key=value config file");
  train_cmd->add_option("--history", tf.history, "Per-epoch loss CSV");
  const std::vector<std::pair<std::string, std::string>> override_flags = {
      {"--exposure", "exposure"},           {"--gt", "gt"},
      {"--loss", "loss"},                   {"--lr", "lr"},
      {"--batch-size", "batch_size"},       {"--epochs", "epochs"},
      {"--input-size", "input_size"},       {"--channel-scale", "channel_scale"},
      {"--dropout", "dropout_rate"},        {"--seed", "seed"},
      {"--input-channels", "input_channels"}, {"--low-range", "low_range"},
      {"--high-range", "high_range"},
  };
  std::map<std::string, std::string> override_values;
  for (const auto& [flag, key] : override_flags) {
    train_cmd->add_option(flag, override_values[key], "Overrides config key " + key);
  }

  auto* eval = app.add_subcommand("eval", "Score models against ground truth");
  std::string eval_data, eval_report, eval_split = "all";
  std::vector<std::string> eval_models;
  bool eval_per_image = false;
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--model", eval_models, "Model file(s); one report row each")->required();
  eval->add_option("--report", eval_report, "Output CSV")->required();
  eval->add_option("--split", eval_split, "all, train or holdout");
  eval->add_flag("--per-image", eval_per_image, "Average per-image metrics instead of pooling counts");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  std::size_t gc_scale = 8, gc_samples = 152;
  gradcheck->add_option("--scale", gc_scale, "U-Net channel divisor");
  gradcheck->add_option("--samples", gc_samples, "Parameters probed in the full-network check");

  CLI11_PARSE(app, argc, argv);

  try {
    ThresholdRanges ranges{parse_luma_range(low_range), parse_luma_range(high_range)};
    if (synth->parsed()) return run_synth(synth_out, synth_count, synth_size, synth_seed, synth_params);
    if (gt->parsed()) return run_gt(gt_data, gt_method, gt_exposure, ranges);
    if (compare->parsed()) return run_compare(compare_data, compare_out, ranges);
    if (train_cmd->parsed()) {
      for (const auto& [flag, key] : override_flags) {
        if (train_cmd->count(flag) > 0) tf.overrides[key] = override_values[key];
      }
      return run_train(tf);
    }
    if (eval->parsed()) return run_eval(eval_data, eval_models, eval_report, eval_split, eval_per_image);
    if (gradcheck->parsed()) return run_gradcheck(gc_scale, gc_samples);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
