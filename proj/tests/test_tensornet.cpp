#include <cmath>
#include <numeric>
#include <random>

#include "expomask/adam.hpp"
#include "expomask/gradcheck.hpp"
#include "expomask/layers.hpp"
#include "expomask/losses.hpp"
#include "expomask/model_io.hpp"
#include "expomask/unet.hpp"
#include "test_util.hpp"

using namespace expomask;
using testutil::random_tensor;
using testutil::TempDir;

namespace {

UNetParams small_net(std::uint64_t seed, std::size_t channels = 3) {
  return init_params(UNetConfig{channels, 8}, seed);
}

double sum_of(const Tensor& t) { return std::accumulate(t.values().begin(), t.values().end(), 0.0); }

}  // namespace

TEST(Tensor, ShapeAndAccess) {
  Tensor t({2, 3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(shape_string(t.shape()), "[2,3,4,5]");
  t.at(1, 2, 3, 4) = 7.0;
  EXPECT_EQ(t[119], 7.0);
  EXPECT_TRUE(t.all_finite());
  t[0] = std::nan("");
  EXPECT_FALSE(t.all_finite());
  EXPECT_THROW(Tensor({2, 0}), Error);
  EXPECT_ERROR_CODE(require_same_shape(Tensor({2}), Tensor({3}), "x"), ErrorCode::kShapeMismatch);
}

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({2, 5, 7, 1}, rng);
  Tensor k({3, 3, 1, 1});
  k.at(1, 1, 0, 0) = 1.0;
  EXPECT_EQ(nn::conv2d(x, k, Tensor({1})), x);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({1, 4, 4, 3}, rng);
  const Tensor y = nn::conv2d(x, Tensor({3, 3, 3, 2}), Tensor({2}, std::vector<double>{0.5, -2.0}));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], i % 2 == 0 ? 0.5 : -2.0);
}

TEST(Conv2d, OnesOnOnesZeroPadding) {
  const Tensor y = nn::conv2d(Tensor({1, 3, 3, 1}, 1.0), Tensor({3, 3, 1, 1}, 1.0), Tensor({1}));
  EXPECT_EQ(y.at(0, 1, 1, 0), 9.0);
  for (auto [r, c] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) EXPECT_EQ(y.at(0, r, c, 0), 4.0);
  for (auto [r, c] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) EXPECT_EQ(y.at(0, r, c, 0), 6.0);
}

TEST(Conv2d, LinearInInput) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor({1, 6, 6, 2}, rng);
  const Tensor b = random_tensor({1, 6, 6, 2}, rng);
  const Tensor k = random_tensor({3, 3, 2, 3}, rng);
  const Tensor zero({3});
  Tensor ab = a;
  for (std::size_t i = 0; i < ab.size(); ++i) ab[i] = 2.0 * a[i] - 0.5 * b[i];
  const Tensor ya = nn::conv2d(a, k, zero), yb = nn::conv2d(b, k, zero), yab = nn::conv2d(ab, k, zero);
  for (std::size_t i = 0; i < yab.size(); ++i) EXPECT_NEAR(yab[i], 2.0 * ya[i] - 0.5 * yb[i], 1e-12);
}

TEST(Conv2d, ShapeErrors) {
  EXPECT_ERROR_CODE(nn::conv2d(Tensor({1, 4, 4, 2}), Tensor({3, 3, 3, 1}), Tensor({1})), ErrorCode::kShapeMismatch);
}

TEST(Upconv2, DoublesExtentAndPlacesTaps) {
  // One input pixel at (1,1): taps land at (2+di, 2+dj).
  Tensor x({1, 3, 3, 1});
  x.at(0, 1, 1, 0) = 1.0;
  Tensor k({3, 3, 1, 1});
  for (std::size_t i = 0; i < 9; ++i) k[i] = static_cast<double>(i + 1);
  const Tensor y = nn::upconv2(x, k, Tensor({1}));
  ASSERT_EQ(y.shape(), (Shape{1, 6, 6, 1}));
  for (std::size_t di = 0; di < 3; ++di)
    for (std::size_t dj = 0; dj < 3; ++dj) EXPECT_EQ(y.at(0, 2 + di, 2 + dj, 0), k.at(di, dj, 0, 0));
  EXPECT_EQ(sum_of(y), 45.0);
}

TEST(MaxPool, PicksMaxAndRecordsIndex) {
  const Tensor x({1, 2, 2, 1}, std::vector<double>{1, 2, 3, 4});
  const nn::PoolResult p = nn::maxpool2(x);
  ASSERT_EQ(p.output.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(p.output[0], 4.0);
  EXPECT_EQ(p.argmax[0], 3u);  // row 1, col 1
  EXPECT_ERROR_CODE(nn::maxpool2(Tensor({1, 3, 2, 1})), ErrorCode::kOddExtent);
}

TEST(MaxPool, BackwardConservesGradient) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({2, 8, 6, 3}, rng);
  const nn::PoolResult p = nn::maxpool2(x);
  const Tensor dy = random_tensor(p.output.shape(), rng);
  const Tensor dx = nn::maxpool2_backward(x.shape(), p.argmax, dy);
  EXPECT_NEAR(sum_of(dx), sum_of(dy), 1e-12);
  std::size_t nonzero = 0;
  for (double v : dx.values()) nonzero += v != 0.0;
  EXPECT_EQ(nonzero, dy.size());
}

TEST(Concat, SplitInvertsConcat) {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor({1, 4, 4, 2}, rng);
  const Tensor b = random_tensor({1, 4, 4, 3}, rng);
  const auto [a2, b2] = nn::split_channels(nn::concat_channels(a, b), 2);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
}

TEST(Dropout, MaskValuesAndRate) {
  std::mt19937_64 rng(6);
  const Tensor m = nn::dropout_mask({1, 64, 64, 8}, 0.2, rng);
  std::size_t zeros = 0;
  for (double v : m.values()) {
    ASSERT_TRUE(v == 0.0 || v == 1.25);
    zeros += v == 0.0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / static_cast<double>(m.size()), 0.2, 0.02);
}

TEST(UNet, WidthsFollowBaseProfile) {
  EXPECT_EQ(UNetConfig{}.widths(), (std::array<std::size_t, 5>{16, 32, 64, 128, 256}));
  EXPECT_EQ((UNetConfig{3, 8}.widths()), (std::array<std::size_t, 5>{2, 4, 8, 16, 32}));
  EXPECT_ERROR_CODE(validate(UNetConfig{3, 3}), ErrorCode::kInvalidParams);
  EXPECT_ERROR_CODE(validate(UNetConfig{2, 1}), ErrorCode::kInvalidParams);
  const UNetParams p = init_params(UNetConfig{}, 0);
  EXPECT_EQ(p.encoder[0].conv1.kernel.shape(), (Shape{3, 3, 3, 16}));
  EXPECT_EQ(p.encoder[4].conv2.kernel.shape(), (Shape{3, 3, 256, 256}));
  EXPECT_EQ(p.decoder[0].up.kernel.shape(), (Shape{3, 3, 256, 128}));
  EXPECT_EQ(p.decoder[0].conv1.kernel.shape(), (Shape{3, 3, 256, 128}));
  EXPECT_EQ(p.decoder[3].conv2.kernel.shape(), (Shape{3, 3, 16, 16}));
  EXPECT_EQ(p.head.kernel.shape(), (Shape{1, 1, 16, 1}));
  EXPECT_EQ(tensor_names().size(), p.tensors().size());
  EXPECT_EQ(tensor_names().front(), "enc0.conv1.kernel");
  EXPECT_EQ(tensor_names().back(), "head.bias");
}

TEST(UNet, OutputShapeAndRange) {
  const UNetParams p = init_params(UNetConfig{}, 1);
  std::mt19937_64 rng(7);
  const Tensor x = random_tensor({1, 64, 64, 3}, rng, 0.0, 1.0);
  const Tensor y = unet_forward(p, x, NetMode::eval());
  ASSERT_EQ(y.shape(), (Shape{1, 64, 64, 1}));
  for (double v : y.values()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(UNet, FullResolutionBatch) {
  const UNetParams p = init_params(UNetConfig{}, 2);
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor({2, 512, 512, 3}, rng, 0.0, 1.0);
  const Tensor y = unet_forward(p, x, NetMode::eval());
  EXPECT_EQ(y.shape(), (Shape{2, 512, 512, 1}));
  EXPECT_TRUE(y.all_finite());
}

TEST(UNet, ExtentAndChannelErrors) {
  const UNetParams p = small_net(0);
  EXPECT_ERROR_CODE(unet_forward(p, Tensor({1, 50, 50, 3}), NetMode::eval()), ErrorCode::kIndivisibleExtent);
  EXPECT_ERROR_CODE(unet_forward(p, Tensor({1, 32, 32, 1}), NetMode::eval()), ErrorCode::kShapeMismatch);
}

TEST(UNet, EvalIsDeterministicAndTrainModeReproducible) {
  const UNetParams p = small_net(3);
  std::mt19937_64 rng(9);
  const Tensor x = random_tensor({2, 32, 32, 3}, rng, 0.0, 1.0);
  EXPECT_EQ(unet_forward(p, x, NetMode::eval()), unet_forward(p, x, NetMode::eval()));
  const NetMode train = NetMode::train(0.2, 77);
  EXPECT_EQ(unet_forward(p, x, train), unet_forward(p, x, train));
  EXPECT_NE(unet_forward(p, x, train), unet_forward(p, x, NetMode::eval()));
}

TEST(UNet, ZeroUpstreamGivesZeroGradients) {
  const UNetParams p = small_net(4);
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor({1, 16, 16, 3}, rng, 0.0, 1.0);
  const UNetParams g = unet_backward(p, x, NetMode::train(0.2, 1), Tensor({1, 16, 16, 1}));
  for (const Tensor* t : g.tensors())
    for (double v : t->values()) ASSERT_EQ(v, 0.0);
  EXPECT_EQ(g.config, p.config);
}

TEST(UNet, HeadBiasGradientUnderMeanBce) {
  const UNetParams p = small_net(5);
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor({2, 16, 16, 3}, rng, 0.0, 1.0);
  Tensor y({2, 16, 16, 1});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (rng() % 2) ? 1.0 : 0.0;
  const UNetTape tape = unet_forward_tape(p, x, NetMode::eval());
  const LossResult loss = bce(y, tape.output);
  const UNetParams g = unet_backward(p, tape, loss.grad);
  double expected = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) expected += tape.output[i] - y[i];
  expected /= static_cast<double>(y.size());
  EXPECT_NEAR(g.head.bias[0], expected, 1e-12);
}

TEST(UNet, BackwardMatchesFiniteDifferences) {
  GradCheckOptions opts;
  opts.unet_samples = 40;
  bool saw_unet = false;
  for (const GradCheckResult& r : run_gradcheck(opts)) {
    EXPECT_TRUE(r.passed) << r.name << " max rel err " << r.max_rel_error;
    EXPECT_GT(r.probes, 0u) << r.name;
    saw_unet = saw_unet || r.name.find("unet") != std::string::npos;
  }
  EXPECT_TRUE(saw_unet);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-3);
  double x = 3.0;
  EXPECT_NEAR(central_difference([&] { return x * x; }, x, 1e-4), 6.0, 1e-8);
  EXPECT_EQ(x, 3.0);
}

TEST(Init, SameSeedSameParamsAndZeroBiases) {
  const UNetParams a = init_params(UNetConfig{}, 123);
  const UNetParams b = init_params(UNetConfig{}, 123);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_params(UNetConfig{}, 124));
  for (const ConvLayer* layer : {&a.encoder[0].conv1, &a.decoder[2].up, &a.head})
    for (double v : layer->bias.values()) EXPECT_EQ(v, 0.0);
}

TEST(Init, HeNormalSpread) {
  const UNetParams p = init_params(UNetConfig{}, 9);
  const auto k = p.encoder[3].conv1.kernel.values();  // fan_in 3*3*64
  double mean = 0.0, sq = 0.0;
  for (double v : k) mean += v;
  mean /= static_cast<double>(k.size());
  for (double v : k) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(k.size()));
  const double expected = std::sqrt(2.0 / 576.0);
  EXPECT_NEAR(sd, expected, 0.1 * expected);
  EXPECT_NEAR(mean, 0.0, 0.01 * expected * 10);
}

TEST(Adam, ZeroGradientLeavesParams) {
  UNetParams p = small_net(6);
  const UNetParams before = p;
  AdamState s = make_adam_state(p);
  adam_step(p, zero_params(p.config), s);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, FirstStepFromUnitGradient) {
  UNetParams p = zero_params(UNetConfig{3, 8});
  UNetParams g = zero_params(p.config);
  g.head.bias[0] = 1.0;
  AdamState s = make_adam_state(p);
  adam_step(p, g, s);
  // Recurrence by hand: m = 0.1, v = 0.001, both bias corrections give 1.
  const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
  const double expected = -0.001 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_DOUBLE_EQ(p.head.bias[0], expected);
  EXPECT_NEAR(p.head.bias[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(p.head.kernel[0], 0.0);
}

TEST(Adam, DeterministicFromSameState) {
  const UNetParams start = small_net(7);
  std::mt19937_64 rng(12);
  UNetParams g = zero_params(start.config);
  for (Tensor* t : g.tensors())
    for (double& v : t->values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  UNetParams a = start, b = start;
  AdamState sa = make_adam_state(start), sb = make_adam_state(start);
  for (int i = 0; i < 3; ++i) {
    adam_step(a, g, sa);
    adam_step(b, g, sb);
  }
  EXPECT_EQ(a, b);
  EXPECT_EQ(sa.m, sb.m);
  EXPECT_EQ(sa.t, 3u);
}

TEST(ModelIo, RoundTripIsBitExact) {
  TempDir dir("model");
  const UNetParams p = small_net(8);
  const std::map<std::string, std::string> meta{{"train.loss", "bce"}, {"note", "x"}};
  save_model(dir.path() / "m.bin", p, meta);
  const ModelFile f = load_model(dir.path() / "m.bin", p.config);
  EXPECT_EQ(f.params, p);
  EXPECT_EQ(f.metadata.at("train.loss"), "bce");
  EXPECT_EQ(serialize_model(f.params, f.metadata), serialize_model(p, meta));
  EXPECT_EQ(serialize_model(p, meta).rfind("EXPOMASK1\n", 0), 0u);
  EXPECT_ERROR_CODE(serialize_model(p, {{"note", "two words"}}), ErrorCode::kInvalidArgument);
}

TEST(ModelIo, RejectsBadMagicAndTruncation) {
  const std::string bytes = serialize_model(small_net(9));
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_ERROR_CODE(deserialize_model(bad), ErrorCode::kModelFormat);
  EXPECT_ERROR_CODE(deserialize_model(bytes.substr(0, bytes.size() - 8)), ErrorCode::kModelFormat);
  EXPECT_ERROR_CODE(deserialize_model(""), ErrorCode::kModelFormat);
}

TEST(ModelIo, ShapeMismatchAgainstExpectedConfig) {
  const std::string bytes = serialize_model(small_net(10));
  EXPECT_ERROR_CODE(deserialize_model(bytes, UNetConfig{3, 4}), ErrorCode::kShapeMismatch);
  EXPECT_ERROR_CODE(deserialize_model(bytes, UNetConfig{1, 8}), ErrorCode::kShapeMismatch);
  EXPECT_NO_THROW(deserialize_model(bytes, UNetConfig{3, 8}));
}
