#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "expomask/tensor.hpp"

// Forward and backward kernels for NHWC tensors. Every backward function
// takes the forward inputs it needs plus the upstream gradient and returns the
// exact reverse-mode gradients.
namespace expomask::nn {

struct ConvGrads {
  Tensor input;   // empty when not requested
  Tensor kernel;
  Tensor bias;
};

// Same-padded, stride-1 cross-correlation. kernel is [k, k, Cin, Cout] with k
// odd; bias is [Cout].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);
ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output,
                          bool need_input_grad = true);

// 3x3 transpose convolution, stride 2: output(2i+di, 2j+dj) accumulates
// input(i, j) * kernel(di, dj); the row/column past 2H/2W is dropped so the
// output is exactly twice the input extent.
Tensor upconv2(const Tensor& input, const Tensor& kernel, const Tensor& bias);
ConvGrads upconv2_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_output);

Tensor sigmoid(const Tensor& x);
// Takes the sigmoid output, not its input.
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_output);

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// 2x2 window, stride 2. The first maximum in row-major window order wins.
PoolResult maxpool2(const Tensor& x);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Inverse of concat_channels for gradients: the first `channels_a` channels go
// to the first tensor.
std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t channels_a);

// Inverted dropout mask: each element is 0 with probability `rate`, otherwise
// 1 / (1 - rate).
Tensor dropout_mask(const Shape& shape, double rate, std::mt19937_64& rng);
Tensor multiply(const Tensor& a, const Tensor& b);

}  // namespace expomask::nn
