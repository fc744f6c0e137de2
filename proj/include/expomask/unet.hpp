#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "expomask/tensor.hpp"

namespace expomask {

inline constexpr std::array<std::size_t, 5> kBaseWidths{16, 32, 64, 128, 256};

// Input channel count and the width divisor; widths are kBaseWidths / scale.
struct UNetConfig {
  std::size_t input_channels = 3;
  std::size_t channel_scale = 1;

  std::array<std::size_t, 5> widths() const;
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

// Throws kInvalidParams for input_channels outside {1,3} or a scale that does
// not divide the narrowest width.
void validate(const UNetConfig& config);

struct ConvLayer {
  Tensor kernel;  // [k, k, Cin, Cout]
  Tensor bias;    // [Cout]

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct EncoderBlock {
  ConvLayer conv1;
  ConvLayer conv2;

  friend bool operator==(const EncoderBlock&, const EncoderBlock&) = default;
};

struct DecoderBlock {
  ConvLayer up;  // 3x3 transpose conv, stride 2
  ConvLayer conv1;
  ConvLayer conv2;

  friend bool operator==(const DecoderBlock&, const DecoderBlock&) = default;
};

// Five encoder blocks (the fifth is the bottleneck), four decoder blocks and a
// 1x1 head producing one channel.
struct UNetParams {
  UNetConfig config;
  std::array<EncoderBlock, 5> encoder;
  std::array<DecoderBlock, 4> decoder;
  ConvLayer head;

  // Stable order used by the optimizer and the model file.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;

  friend bool operator==(const UNetParams&, const UNetParams&) = default;
};

// Names matching UNetParams::tensors(), e.g. "enc0.conv1.kernel".
std::vector<std::string> tensor_names();

// Zero-filled parameters with every shape the configuration implies.
UNetParams zero_params(const UNetConfig& config);

// He-normal kernels (std = sqrt(2 / fan_in)) and zero biases.
UNetParams init_params(const UNetConfig& config, std::uint64_t seed);

// Throws kShapeMismatch if any tensor deviates from the configured shapes.
void validate_shapes(const UNetParams& params);

class NetMode {
 public:
  static NetMode eval() { return NetMode(false, 0.0, 0); }
  // Dropout masks are drawn from an rng seeded with `seed`, so a mode value
  // reproduces the same masks on every forward pass.
  static NetMode train(double dropout_rate, std::uint64_t seed);

  bool training() const { return training_; }
  double dropout_rate() const { return rate_; }
  std::uint64_t seed() const { return seed_; }

 private:
  NetMode(bool training, double rate, std::uint64_t seed) : training_(training), rate_(rate), seed_(seed) {}
  bool training_;
  double rate_;
  std::uint64_t seed_;
};

// Activations retained by a forward pass for the matching backward pass.
struct UNetTape {
  struct Encoder {
    Tensor input, pre1, act1, pre2;
    Tensor dropout;  // empty in eval mode
    Tensor out;      // skip connection / pool input
    std::vector<std::size_t> argmax;
  };
  struct Decoder {
    Tensor input, concat, pre1, dropout, dropped, pre2, out;
  };
  std::array<Encoder, 5> encoder;
  std::array<Decoder, 4> decoder;
  Tensor output;  // sigmoid probabilities, [N, H, W, 1]
};

// Requires H and W divisible by 16 (kIndivisibleExtent) and C equal to the
// configured input channels (kShapeMismatch).
UNetTape unet_forward_tape(const UNetParams& params, const Tensor& x, const NetMode& mode);
Tensor unet_forward(const UNetParams& params, const Tensor& x, const NetMode& mode);

// Gradients of sum(upstream_grad * output) with respect to every parameter.
UNetParams unet_backward(const UNetParams& params, const UNetTape& tape, const Tensor& upstream_grad);
// Re-runs the forward pass under `mode` (reproducing its dropout masks) first.
UNetParams unet_backward(const UNetParams& params, const Tensor& x, const NetMode& mode,
                         const Tensor& upstream_grad);

}  // namespace expomask
