#include "expomask/layers.hpp"

#include <cmath>

#include "expomask/error.hpp"

namespace expomask::nn {

namespace {

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " expects NHWC, got " + shape_string(t.shape()));
  }
}

void check_kernel(const Tensor& input, const Tensor& kernel, const Tensor& bias, const char* what) {
  require_rank4(input, what);
  if (kernel.rank() != 4 || kernel.dim(0) != kernel.dim(1) || kernel.dim(0) % 2 == 0 ||
      kernel.dim(2) != input.dim(3)) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": kernel " + shape_string(kernel.shape()) +
                                               " incompatible with input " + shape_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(3)) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": bias " + shape_string(bias.shape()) +
                                               " does not match kernel " + shape_string(kernel.shape()));
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  check_kernel(input, kernel, bias, "conv2d");
  const std::size_t n_batch = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);

  Tensor out({n_batch, h, w, cout});
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double* o = &out.at(n, i, j, 0);
        for (std::size_t co = 0; co < cout; ++co) o[co] = bias[co];
        for (std::size_t di = 0; di < k; ++di) {
          const auto ii = static_cast<std::ptrdiff_t>(i + di) - pad;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < k; ++dj) {
            const auto jj = static_cast<std::ptrdiff_t>(j + dj) - pad;
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
            const double* x = &input.at(n, static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), 0);
            const double* kk = kernel.data() + (di * k + dj) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double xv = x[ci];
              const double* krow = kk + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) o[co] += xv * krow[co];
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output,
                          bool need_input_grad) {
  check_kernel(input, kernel, Tensor({kernel.dim(3)}), "conv2d_backward");
  const std::size_t n_batch = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
  if (grad_output.shape() != Shape{n_batch, h, w, cout}) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d_backward: upstream gradient " +
                                               shape_string(grad_output.shape()));
  }
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);

  ConvGrads g;
  if (need_input_grad) g.input = Tensor(input.shape());
  g.kernel = Tensor(kernel.shape());
  g.bias = Tensor({cout});
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double* go = &grad_output.at(n, i, j, 0);
        for (std::size_t co = 0; co < cout; ++co) g.bias[co] += go[co];
        for (std::size_t di = 0; di < k; ++di) {
          const auto ii = static_cast<std::ptrdiff_t>(i + di) - pad;
          if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t dj = 0; dj < k; ++dj) {
            const auto jj = static_cast<std::ptrdiff_t>(j + dj) - pad;
            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
            const auto ui = static_cast<std::size_t>(ii), uj = static_cast<std::size_t>(jj);
            const double* x = &input.at(n, ui, uj, 0);
            double* gx = need_input_grad ? &g.input.at(n, ui, uj, 0) : nullptr;
            const std::size_t koff = (di * k + dj) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double xv = x[ci];
              const double* krow = kernel.data() + koff + ci * cout;
              double* gkrow = g.kernel.data() + koff + ci * cout;
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                acc += go[co] * krow[co];
                gkrow[co] += xv * go[co];
              }
              if (gx) gx[ci] += acc;
            }
          }
        }
      }
    }
  }
  return g;
}

namespace {

void check_upconv(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  check_kernel(input, kernel, bias, "upconv2");
  if (kernel.dim(0) != 3) {
    throw Error(ErrorCode::kShapeMismatch, "upconv2 requires a 3x3 kernel");
  }
}

}  // namespace

Tensor upconv2(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  check_upconv(input, kernel, bias);
  const std::size_t n_batch = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t cout = kernel.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;

  Tensor out({n_batch, oh, ow, cout});
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        double* o = &out.at(n, i, j, 0);
        for (std::size_t co = 0; co < cout; ++co) o[co] = bias[co];
      }
    }
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double* x = &input.at(n, i, j, 0);
        for (std::size_t di = 0; di < 3; ++di) {
          if (2 * i + di >= oh) continue;
          for (std::size_t dj = 0; dj < 3; ++dj) {
            if (2 * j + dj >= ow) continue;
            double* o = &out.at(n, 2 * i + di, 2 * j + dj, 0);
            const double* kk = kernel.data() + (di * 3 + dj) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double xv = x[ci];
              const double* krow = kk + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) o[co] += xv * krow[co];
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads upconv2_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_output) {
  check_upconv(input, kernel, Tensor({kernel.dim(3)}));
  const std::size_t n_batch = input.dim(0), h = input.dim(1), w = input.dim(2), cin = input.dim(3);
  const std::size_t cout = kernel.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;
  if (grad_output.shape() != Shape{n_batch, oh, ow, cout}) {
    throw Error(ErrorCode::kShapeMismatch, "upconv2_backward: upstream gradient " +
                                               shape_string(grad_output.shape()));
  }

  ConvGrads g{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({cout})};
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const double* go = &grad_output.at(n, i, j, 0);
        for (std::size_t co = 0; co < cout; ++co) g.bias[co] += go[co];
      }
    }
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double* x = &input.at(n, i, j, 0);
        double* gx = &g.input.at(n, i, j, 0);
        for (std::size_t di = 0; di < 3; ++di) {
          if (2 * i + di >= oh) continue;
          for (std::size_t dj = 0; dj < 3; ++dj) {
            if (2 * j + dj >= ow) continue;
            const double* go = &grad_output.at(n, 2 * i + di, 2 * j + dj, 0);
            const std::size_t koff = (di * 3 + dj) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double xv = x[ci];
              const double* krow = kernel.data() + koff + ci * cout;
              double* gkrow = g.kernel.data() + koff + ci * cout;
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                acc += go[co] * krow[co];
                gkrow[co] += xv * go[co];
              }
              gx[ci] += acc;
            }
          }
        }
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_output) {
  require_same_shape(x, grad_output, "relu_backward");
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_output[i] : 0.0;
  return g;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Branch keeps exp() from overflowing for large |x|.
    const double v = x[i];
    if (v >= 0.0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_output) {
  require_same_shape(y, grad_output, "sigmoid_backward");
  Tensor g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = grad_output[i] * y[i] * (1.0 - y[i]);
  return g;
}

PoolResult maxpool2(const Tensor& x) {
  require_rank4(x, "maxpool2");
  const std::size_t n_batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorCode::kOddExtent, "maxpool2 on " + shape_string(x.shape()));
  }
  PoolResult r{Tensor({n_batch, h / 2, w / 2, c}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t i = 0; i < h / 2; ++i) {
      for (std::size_t j = 0; j < w / 2; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = ((n * h + 2 * i) * w + 2 * j) * c + ch;
          for (std::size_t di = 0; di < 2; ++di) {
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t idx = ((n * h + 2 * i + di) * w + 2 * j + dj) * c + ch;
              if (x[idx] > x[best]) best = idx;
            }
          }
          r.output[o] = x[best];
          r.argmax[o] = best;
        }
      }
    }
  }
  return r;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output) {
  if (argmax.size() != grad_output.size()) {
    throw Error(ErrorCode::kShapeMismatch, "maxpool2_backward: argmax/gradient size mismatch");
  }
  Tensor g(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_output[o];
  return g;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw Error(ErrorCode::kShapeMismatch, "concat_channels: " + shape_string(a.shape()) + " vs " +
                                               shape_string(b.shape()));
  }
  const std::size_t ca = a.dim(3), cb = b.dim(3);
  const std::size_t pixels = a.dim(0) * a.dim(1) * a.dim(2);
  Tensor out({a.dim(0), a.dim(1), a.dim(2), ca + cb});
  for (std::size_t p = 0; p < pixels; ++p) {
    double* o = out.data() + p * (ca + cb);
    for (std::size_t c = 0; c < ca; ++c) o[c] = a[p * ca + c];
    for (std::size_t c = 0; c < cb; ++c) o[ca + c] = b[p * cb + c];
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, std::size_t channels_a) {
  require_rank4(x, "split_channels");
  const std::size_t c = x.dim(3);
  if (channels_a == 0 || channels_a >= c) {
    throw Error(ErrorCode::kShapeMismatch, "split_channels: bad split point");
  }
  const std::size_t cb = c - channels_a;
  const std::size_t pixels = x.dim(0) * x.dim(1) * x.dim(2);
  Tensor a({x.dim(0), x.dim(1), x.dim(2), channels_a});
  Tensor b({x.dim(0), x.dim(1), x.dim(2), cb});
  for (std::size_t p = 0; p < pixels; ++p) {
    const double* src = x.data() + p * c;
    for (std::size_t k = 0; k < channels_a; ++k) a[p * channels_a + k] = src[k];
    for (std::size_t k = 0; k < cb; ++k) b[p * cb + k] = src[channels_a + k];
  }
  return {std::move(a), std::move(b)};
}

Tensor dropout_mask(const Shape& shape, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "dropout rate must lie in [0,1)");
  }
  Tensor mask(shape, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : mask.values()) v = unit(rng) < rate ? 0.0 : keep_scale;
  return mask;
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "multiply");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace expomask::nn
