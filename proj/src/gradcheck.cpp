#include "expomask/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "expomask/layers.hpp"
#include "expomask/losses.hpp"
#include "expomask/unet.hpp"

namespace expomask {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kGradCheckFloor});
}

double central_difference(const std::function<double()>& f, double& coordinate, double step) {
  const double saved = coordinate;
  coordinate = saved + step;
  const double up = f();
  coordinate = saved - step;
  const double down = f();
  coordinate = saved;
  return (up - down) / (2.0 * step);
}

namespace {

using Rng = std::mt19937_64;

Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor t(shape);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

// Distinct values spaced at least 1e-2 apart so no max or ReLU kink lies
// within a finite-difference step.
Tensor spaced_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (static_cast<double>(i) + 0.5) * 1e-2;
  const double mid = v.back() * 0.5;
  for (auto& x : v) x -= mid;
  std::shuffle(v.begin(), v.end(), rng);
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Probe {
  Tensor* target;
  const Tensor* analytic;
};

// Compares analytic gradients against central differences for every element
// of every probed tensor.
GradCheckResult check_all(const std::string& name, const std::function<double()>& loss,
                          const std::vector<Probe>& probes, double step, double tol) {
  GradCheckResult r{name, 0, 0.0, tol, true};
  for (const auto& p : probes) {
    auto values = p.target->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double numeric = central_difference(loss, values[i], step);
      r.max_rel_error = std::max(r.max_rel_error, relative_error((*p.analytic)[i], numeric));
      ++r.probes;
    }
  }
  r.passed = r.max_rel_error <= tol;
  return r;
}

std::vector<GradCheckResult> layer_checks(const GradCheckOptions& o, Rng& rng) {
  std::vector<GradCheckResult> out;
  const double h = o.layer_step;
  const double tol = o.layer_tolerance;

  for (std::size_t k : {std::size_t{3}, std::size_t{1}}) {
    Tensor x = random_tensor({2, 5, 4, 3}, rng);
    Tensor kernel = random_tensor({k, k, 3, 2}, rng);
    Tensor bias = random_tensor({2}, rng);
    const Tensor weights = random_tensor({2, 5, 4, 2}, rng);
    auto g = nn::conv2d_backward(x, kernel, weights);
    auto f = [&] { return dot(weights, nn::conv2d(x, kernel, bias)); };
    out.push_back(check_all("conv2d " + std::to_string(k) + "x" + std::to_string(k), f,
                            {{&x, &g.input}, {&kernel, &g.kernel}, {&bias, &g.bias}}, h, tol));
  }
  {
    Tensor x = random_tensor({2, 3, 4, 3}, rng);
    Tensor kernel = random_tensor({3, 3, 3, 2}, rng);
    Tensor bias = random_tensor({2}, rng);
    const Tensor weights = random_tensor({2, 6, 8, 2}, rng);
    auto g = nn::upconv2_backward(x, kernel, weights);
    auto f = [&] { return dot(weights, nn::upconv2(x, kernel, bias)); };
    out.push_back(check_all("upconv2", f, {{&x, &g.input}, {&kernel, &g.kernel}, {&bias, &g.bias}}, h, tol));
  }
  {
    Tensor x = spaced_tensor({2, 4, 4, 3}, rng);
    const Tensor weights = random_tensor(x.shape(), rng);
    const Tensor g = nn::relu_backward(x, weights);
    auto f = [&] { return dot(weights, nn::relu(x)); };
    out.push_back(check_all("relu", f, {{&x, &g}}, h, tol));
  }
  {
    Tensor x = random_tensor({2, 4, 4, 3}, rng, 3.0);
    const Tensor weights = random_tensor(x.shape(), rng);
    const Tensor g = nn::sigmoid_backward(nn::sigmoid(x), weights);
    auto f = [&] { return dot(weights, nn::sigmoid(x)); };
    out.push_back(check_all("sigmoid", f, {{&x, &g}}, h, tol));
  }
  {
    Tensor x = spaced_tensor({2, 4, 6, 3}, rng);
    const auto pooled = nn::maxpool2(x);
    const Tensor weights = random_tensor(pooled.output.shape(), rng);
    const Tensor g = nn::maxpool2_backward(x.shape(), pooled.argmax, weights);
    auto f = [&] { return dot(weights, nn::maxpool2(x).output); };
    out.push_back(check_all("maxpool2", f, {{&x, &g}}, h, tol));
  }
  {
    Tensor a = random_tensor({2, 3, 3, 2}, rng);
    Tensor b = random_tensor({2, 3, 3, 3}, rng);
    const Tensor weights = random_tensor({2, 3, 3, 5}, rng);
    auto [ga, gb] = nn::split_channels(weights, 2);
    auto f = [&] { return dot(weights, nn::concat_channels(a, b)); };
    out.push_back(check_all("concat_channels", f, {{&a, &ga}, {&b, &gb}}, h, tol));
  }
  {
    Rng mask_rng(o.seed);
    Tensor x = random_tensor({2, 4, 4, 3}, rng);
    const Tensor mask = nn::dropout_mask(x.shape(), 0.3, mask_rng);
    const Tensor weights = random_tensor(x.shape(), rng);
    const Tensor g = nn::multiply(weights, mask);
    auto f = [&] { return dot(weights, nn::multiply(x, mask)); };
    out.push_back(check_all("dropout", f, {{&x, &g}}, h, tol));
  }
  return out;
}

std::vector<GradCheckResult> loss_checks(const GradCheckOptions& o, Rng& rng) {
  std::vector<GradCheckResult> out;
  const Shape shape{2, 4, 4, 1};
  std::bernoulli_distribution coin(0.4);
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  Tensor y(shape);
  for (auto& v : y.values()) v = coin(rng) ? 1.0 : 0.0;

  for (LossKind kind : {LossKind::kBce, LossKind::kFocal, LossKind::kDice, LossKind::kDiceBce}) {
    Tensor y_hat(shape);
    for (auto& v : y_hat.values()) v = prob(rng);
    const Tensor g = compute_loss(kind, y, y_hat).grad;
    auto f = [&] { return compute_loss(kind, y, y_hat).value; };
    out.push_back(check_all("loss " + std::string(to_string(kind)), f, {{&y_hat, &g}}, o.loss_step,
                            o.loss_tolerance));
  }
  return out;
}

GradCheckResult unet_check(const GradCheckOptions& o, Rng& rng) {
  const UNetConfig config{3, o.channel_scale};
  UNetParams params = init_params(config, o.seed);
  // Non-zero biases so the check also exercises bias paths away from init.
  auto tensors = params.tensors();
  std::normal_distribution<double> small(0.0, 0.05);
  for (std::size_t i = 1; i < tensors.size(); i += 2) {
    for (auto& v : tensors[i]->values()) v = small(rng);
  }

  const std::size_t s = o.image_size;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor x({1, s, s, 3});
  for (auto& v : x.values()) v = unit(rng);
  Tensor y({1, s, s, 1});
  for (auto& v : y.values()) v = unit(rng) < 0.5 ? 1.0 : 0.0;

  const NetMode mode = NetMode::eval();
  auto loss = [&] { return bce(y, unet_forward(params, x, mode)).value; };
  const UNetTape tape = unet_forward_tape(params, x, mode);
  const UNetParams grads = unet_backward(params, tape, bce(y, tape.output).grad);
  const auto grad_tensors = grads.tensors();

  // Probe every tensor, then fill the remaining budget uniformly at random.
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    std::uniform_int_distribution<std::size_t> idx(0, tensors[t]->size() - 1);
    picks.emplace_back(t, idx(rng));
  }
  std::uniform_int_distribution<std::size_t> which(0, tensors.size() - 1);
  while (picks.size() < o.unet_samples) {
    const std::size_t t = which(rng);
    std::uniform_int_distribution<std::size_t> idx(0, tensors[t]->size() - 1);
    picks.emplace_back(t, idx(rng));
  }

  GradCheckResult r{"unet end-to-end", 0, 0.0, o.layer_tolerance, true};
  for (const auto& [t, i] : picks) {
    const double numeric = central_difference(loss, (*tensors[t])[i], o.layer_step);
    r.max_rel_error = std::max(r.max_rel_error, relative_error((*grad_tensors[t])[i], numeric));
    ++r.probes;
  }
  r.passed = r.max_rel_error <= r.tolerance;
  return r;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& options) {
  Rng rng(options.seed);
  auto results = layer_checks(options, rng);
  auto losses = loss_checks(options, rng);
  results.insert(results.end(), losses.begin(), losses.end());
  results.push_back(unet_check(options, rng));
  return results;
}

}  // namespace expomask
