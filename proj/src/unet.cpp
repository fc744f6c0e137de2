#include "expomask/unet.hpp"

#include <cmath>
#include <random>

#include "expomask/error.hpp"
#include "expomask/layers.hpp"

namespace expomask {

std::array<std::size_t, 5> UNetConfig::widths() const {
  std::array<std::size_t, 5> w{};
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = kBaseWidths[i] / channel_scale;
  return w;
}

void validate(const UNetConfig& config) {
  if (config.input_channels != 1 && config.input_channels != 3) {
    throw Error(ErrorCode::kInvalidParams, "input_channels must be 1 or 3");
  }
  if (config.channel_scale == 0 || kBaseWidths[0] % config.channel_scale != 0) {
    throw Error(ErrorCode::kInvalidParams,
                "channel_scale must divide " + std::to_string(kBaseWidths[0]));
  }
}

std::vector<Tensor*> UNetParams::tensors() {
  std::vector<Tensor*> out;
  auto add = [&](ConvLayer& l) {
    out.push_back(&l.kernel);
    out.push_back(&l.bias);
  };
  for (auto& b : encoder) {
    add(b.conv1);
    add(b.conv2);
  }
  for (auto& b : decoder) {
    add(b.up);
    add(b.conv1);
    add(b.conv2);
  }
  add(head);
  return out;
}

std::vector<const Tensor*> UNetParams::tensors() const {
  auto mutable_ptrs = const_cast<UNetParams*>(this)->tensors();
  return {mutable_ptrs.begin(), mutable_ptrs.end()};
}

std::size_t UNetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

std::vector<std::string> tensor_names() {
  std::vector<std::string> names;
  auto add = [&](const std::string& layer) {
    names.push_back(layer + ".kernel");
    names.push_back(layer + ".bias");
  };
  for (int b = 0; b < 5; ++b) {
    add("enc" + std::to_string(b) + ".conv1");
    add("enc" + std::to_string(b) + ".conv2");
  }
  for (int b = 0; b < 4; ++b) {
    add("dec" + std::to_string(b) + ".up");
    add("dec" + std::to_string(b) + ".conv1");
    add("dec" + std::to_string(b) + ".conv2");
  }
  add("head");
  return names;
}

namespace {

ConvLayer zero_layer(std::size_t k, std::size_t cin, std::size_t cout) {
  return ConvLayer{Tensor({k, k, cin, cout}), Tensor({cout})};
}

}  // namespace

UNetParams zero_params(const UNetConfig& config) {
  validate(config);
  const auto w = config.widths();
  UNetParams p;
  p.config = config;
  std::size_t in = config.input_channels;
  for (std::size_t b = 0; b < 5; ++b) {
    p.encoder[b].conv1 = zero_layer(3, in, w[b]);
    p.encoder[b].conv2 = zero_layer(3, w[b], w[b]);
    in = w[b];
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t level = 3 - j;
    p.decoder[j].up = zero_layer(3, w[level + 1], w[level]);
    p.decoder[j].conv1 = zero_layer(3, 2 * w[level], w[level]);
    p.decoder[j].conv2 = zero_layer(3, w[level], w[level]);
  }
  p.head = zero_layer(1, w[0], 1);
  return p;
}

UNetParams init_params(const UNetConfig& config, std::uint64_t seed) {
  UNetParams p = zero_params(config);
  std::mt19937_64 rng(seed);
  auto tensors = p.tensors();
  // Kernels sit at even positions, biases (left at zero) at odd ones.
  for (std::size_t i = 0; i < tensors.size(); i += 2) {
    Tensor& kernel = *tensors[i];
    const auto fan_in = static_cast<double>(kernel.dim(0) * kernel.dim(1) * kernel.dim(2));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : kernel.values()) v = dist(rng);
  }
  return p;
}

void validate_shapes(const UNetParams& params) {
  const UNetParams expected = zero_params(params.config);
  const auto names = tensor_names();
  const auto got = params.tensors();
  const auto want = expected.tensors();
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i]->shape() != want[i]->shape()) {
      throw Error(ErrorCode::kShapeMismatch, names[i] + " has shape " + shape_string(got[i]->shape()) +
                                                 ", expected " + shape_string(want[i]->shape()));
    }
  }
}

NetMode NetMode::train(double dropout_rate, std::uint64_t seed) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "dropout rate must lie in [0,1)");
  }
  return NetMode(true, dropout_rate, seed);
}

UNetTape unet_forward_tape(const UNetParams& params, const Tensor& x, const NetMode& mode) {
  if (x.rank() != 4) throw Error(ErrorCode::kShapeMismatch, "unet input must be NHWC");
  if (x.dim(1) % 16 != 0 || x.dim(2) % 16 != 0) {
    throw Error(ErrorCode::kIndivisibleExtent,
                "input extent " + shape_string(x.shape()) + " is not divisible by 16");
  }
  if (x.dim(3) != params.config.input_channels) {
    throw Error(ErrorCode::kShapeMismatch, "input has " + std::to_string(x.dim(3)) +
                                               " channels, network expects " +
                                               std::to_string(params.config.input_channels));
  }

  std::mt19937_64 rng(mode.seed());
  auto maybe_dropout = [&](const Tensor& act, Tensor& mask_slot) {
    if (!mode.training() || mode.dropout_rate() == 0.0) return act;
    mask_slot = nn::dropout_mask(act.shape(), mode.dropout_rate(), rng);
    return nn::multiply(act, mask_slot);
  };

  UNetTape tape;
  Tensor current = x;
  for (std::size_t b = 0; b < 5; ++b) {
    auto& t = tape.encoder[b];
    const auto& layer = params.encoder[b];
    t.input = std::move(current);
    t.pre1 = nn::conv2d(t.input, layer.conv1.kernel, layer.conv1.bias);
    t.act1 = nn::relu(t.pre1);
    t.pre2 = nn::conv2d(t.act1, layer.conv2.kernel, layer.conv2.bias);
    t.out = maybe_dropout(nn::relu(t.pre2), t.dropout);
    if (b < 4) {
      auto pooled = nn::maxpool2(t.out);
      t.argmax = std::move(pooled.argmax);
      current = std::move(pooled.output);
    } else {
      current = t.out;
    }
  }

  for (std::size_t j = 0; j < 4; ++j) {
    auto& t = tape.decoder[j];
    const auto& layer = params.decoder[j];
    t.input = std::move(current);
    t.concat = nn::concat_channels(nn::upconv2(t.input, layer.up.kernel, layer.up.bias),
                                   tape.encoder[3 - j].out);
    t.pre1 = nn::conv2d(t.concat, layer.conv1.kernel, layer.conv1.bias);
    t.dropped = maybe_dropout(nn::relu(t.pre1), t.dropout);
    t.pre2 = nn::conv2d(t.dropped, layer.conv2.kernel, layer.conv2.bias);
    t.out = nn::relu(t.pre2);
    current = t.out;
  }

  tape.output = nn::sigmoid(nn::conv2d(current, params.head.kernel, params.head.bias));
  return tape;
}

Tensor unet_forward(const UNetParams& params, const Tensor& x, const NetMode& mode) {
  return std::move(unet_forward_tape(params, x, mode).output);
}

UNetParams unet_backward(const UNetParams& params, const UNetTape& tape, const Tensor& upstream_grad) {
  require_same_shape(tape.output, upstream_grad, "unet_backward upstream gradient");
  UNetParams grads;
  grads.config = params.config;

  auto through_dropout = [](const Tensor& grad, const Tensor& mask) {
    return mask.size() == 0 ? grad : nn::multiply(grad, mask);
  };

  const Tensor head_pre_grad = nn::sigmoid_backward(tape.output, upstream_grad);
  auto head = nn::conv2d_backward(tape.decoder[3].out, params.head.kernel, head_pre_grad);
  grads.head = {std::move(head.kernel), std::move(head.bias)};

  std::array<Tensor, 4> skip_grads;
  Tensor grad = std::move(head.input);
  for (std::size_t jj = 4; jj-- > 0;) {
    const auto& t = tape.decoder[jj];
    const auto& layer = params.decoder[jj];
    auto& g = grads.decoder[jj];

    auto c2 = nn::conv2d_backward(t.dropped, layer.conv2.kernel, nn::relu_backward(t.pre2, grad));
    g.conv2 = {std::move(c2.kernel), std::move(c2.bias)};
    const Tensor pre1_grad = nn::relu_backward(t.pre1, through_dropout(c2.input, t.dropout));
    auto c1 = nn::conv2d_backward(t.concat, layer.conv1.kernel, pre1_grad);
    g.conv1 = {std::move(c1.kernel), std::move(c1.bias)};

    const std::size_t up_channels = layer.up.kernel.dim(3);
    auto [up_grad, skip_grad] = nn::split_channels(c1.input, up_channels);
    skip_grads[3 - jj] = std::move(skip_grad);
    auto up = nn::upconv2_backward(t.input, layer.up.kernel, up_grad);
    g.up = {std::move(up.kernel), std::move(up.bias)};
    grad = std::move(up.input);
  }

  for (std::size_t bb = 5; bb-- > 0;) {
    const auto& t = tape.encoder[bb];
    const auto& layer = params.encoder[bb];
    auto& g = grads.encoder[bb];

    Tensor out_grad;
    if (bb == 4) {
      out_grad = std::move(grad);
    } else {
      out_grad = nn::maxpool2_backward(t.out.shape(), t.argmax, grad);
      out_grad += skip_grads[bb];
    }
    const Tensor pre2_grad = nn::relu_backward(t.pre2, through_dropout(out_grad, t.dropout));
    auto c2 = nn::conv2d_backward(t.act1, layer.conv2.kernel, pre2_grad);
    g.conv2 = {std::move(c2.kernel), std::move(c2.bias)};
    auto c1 = nn::conv2d_backward(t.input, layer.conv1.kernel, nn::relu_backward(t.pre1, c2.input),
                                  /*need_input_grad=*/bb > 0);
    g.conv1 = {std::move(c1.kernel), std::move(c1.bias)};
    grad = std::move(c1.input);
  }
  return grads;
}

UNetParams unet_backward(const UNetParams& params, const Tensor& x, const NetMode& mode,
                         const Tensor& upstream_grad) {
  return unet_backward(params, unet_forward_tape(params, x, mode), upstream_grad);
}

}  // namespace expomask
