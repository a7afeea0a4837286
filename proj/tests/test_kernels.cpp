#include <cmath>
#include <random>

#include "adas/errors.hpp"
#include "adas/kernels.hpp"
#include "doctest.h"

using namespace adas;

namespace {

Tensor4 random_tensor(Shape4 s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor4 t(s);
  for (float& v : t.data()) v = static_cast<float>((rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  return t;
}

// Direct seven-loop convolution with explicit zero padding.
Tensor4 naive_conv(const Tensor4& in, const ConvParams& p) {
  const int k = p.kernel_size, s = p.stride, pad = k / 2;
  const int oh = (in.h() + s - 1) / s, ow = (in.w() + s - 1) / s;
  Tensor4 out({in.n(), p.out_channels, oh, ow});
  for (int n = 0; n < in.n(); ++n)
    for (int oc = 0; oc < p.out_channels; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          double sum = 0.0;
          for (int ic = 0; ic < in.c(); ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = y * s + ky - pad, ix = x * s + kx - pad;
                if (iy < 0 || ix < 0 || iy >= in.h() || ix >= in.w()) continue;
                sum += static_cast<double>(p.weights.at(oc, ic, ky, kx)) * in.at(n, ic, iy, ix);
              }
          out.at(n, oc, y, x) = static_cast<float>(sum);
        }
  return out;
}

ConvParams random_conv(int in, int out, int k, int stride, std::uint64_t seed) {
  ConvParams p = ConvParams::identity_bn(in, out, k, stride);
  p.weights = random_tensor({out, in, k, k}, seed);
  return p;
}

}  // namespace

TEST_CASE("conv2d output shapes follow ceil(in/stride)") {
  ConvParams p = ConvParams::identity_bn(3, 32, 3, 1);
  CHECK(conv2d(Tensor4({1, 3, 40, 40}), p).shape() == Shape4{1, 32, 40, 40});
  ConvParams q = ConvParams::identity_bn(3, 8, 3, 2);
  CHECK(conv2d(Tensor4({1, 3, 7, 9}), q).shape() == Shape4{1, 8, 4, 5});
  ConvParams r = ConvParams::identity_bn(3, 4, 1, 2);
  CHECK(conv2d(Tensor4({1, 3, 5, 5}), r).shape() == Shape4{1, 4, 3, 3});
  for (int in = 1; in <= 37; ++in) {
    for (int stride : {1, 2}) {
      CHECK(same_output_size(in, stride) == static_cast<int>(std::ceil(in / double(stride))));
    }
  }
}

TEST_CASE("table shapes: layer 1 and layer 2 at 608") {
  // Only shapes are checked here; weights are zero.
  CHECK(conv2d(Tensor4({1, 3, 608, 608}), ConvParams::identity_bn(3, 32, 3, 1)).shape() ==
        Shape4{1, 32, 608, 608});
  CHECK(conv2d(Tensor4({1, 32, 608, 608}), ConvParams::identity_bn(32, 64, 3, 2)).shape() ==
        Shape4{1, 64, 304, 304});
}

TEST_CASE("1x1 identity kernel preserves the input") {
  ConvParams p = ConvParams::identity_bn(1, 1, 1, 1);
  p.weights.at(0, 0, 0, 0) = 1.0f;
  Tensor4 in({1, 1, 2, 2}, 1.0f);
  CHECK(conv2d(in, p) == in);
}

TEST_CASE("conv2d matches a naive convolution") {
  for (int k : {1, 3}) {
    for (int stride : {1, 2}) {
      for (int side : {5, 8, 13}) {
        const Tensor4 x = random_tensor({2, 3, side, side + 1}, 11 + side);
        const ConvParams p = random_conv(3, 4, k, stride, 99 + k * stride);
        const Tensor4 got = conv2d(x, p);
        const Tensor4 want = naive_conv(x, p);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("conv2d is linear in its input") {
  const ConvParams p = random_conv(4, 6, 3, 1, 5);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor4 x = random_tensor({1, 4, 9, 9}, 100 + trial);
    const float a = static_cast<float>(0.5 + (rng() % 1000) / 100.0);
    Tensor4 ax = x;
    for (float& v : ax.data()) v *= a;
    const Tensor4 y = conv2d(x, p);
    const Tensor4 ay = conv2d(ax, p);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double want = static_cast<double>(a) * y.data()[i];
      CHECK(std::abs(ay.data()[i] - want) <= 1e-4 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("conv2d is bit-identical across runs and worker counts") {
  const Tensor4 x = random_tensor({1, 8, 24, 24}, 3);
  const ConvParams p = random_conv(8, 16, 3, 2, 4);
  const Tensor4 a = conv2d(x, p, {1});
  CHECK(conv2d(x, p, {1}) == a);
  CHECK(conv2d(x, p, {3}) == a);
}

TEST_CASE("conv2d errors") {
  ConvParams p = ConvParams::identity_bn(3, 4, 3, 1);
  CHECK_THROWS_AS(conv2d(Tensor4({1, 2, 4, 4}), p), ConfigError);
  CHECK_THROWS_AS(Tensor4({1, 3, 0, 4}), InputError);
  p.kernel_size = 5;
  CHECK_THROWS_AS(conv2d(Tensor4({1, 3, 4, 4}), p), ConfigError);
}

TEST_CASE("batch norm") {
  Tensor4 x = random_tensor({1, 2, 3, 3}, 8);
  ConvParams p = ConvParams::identity_bn(2, 2, 1, 1);
  p.bn_eps = 1e-12f;
  const Tensor4 same = batch_norm_infer(x, p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(same.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-6));
  }

  p.bn_scale = {0.0f, 0.0f};
  p.bn_bias = {7.0f, 7.0f};
  const Tensor4 shifted = batch_norm_infer(x, p);
  for (float v : shifted.data()) CHECK(v == 7.0f);

  // 2 * (5 - 3) / sqrt(4) + 1 = 3
  ConvParams q = ConvParams::identity_bn(1, 1, 1, 1);
  q.bn_scale = {2.0f};
  q.bn_bias = {1.0f};
  q.bn_mean = {3.0f};
  q.bn_var = {4.0f};
  q.bn_eps = 1e-12f;
  CHECK(batch_norm_infer(Tensor4({1, 1, 1, 1}, 5.0f), q).data()[0] ==
        doctest::Approx(3.0).epsilon(1e-6));

  q.bn_mean = {1.0f, 2.0f};
  CHECK_THROWS_AS(batch_norm_infer(Tensor4({1, 1, 1, 1}), q), ConfigError);
}

TEST_CASE("leaky relu") {
  Tensor4 t({1, 1, 1, 3});
  t.data()[0] = 0.0f;
  t.data()[1] = 3.5f;
  t.data()[2] = -2.0f;
  const Tensor4 r = leaky_relu(t, 0.1f);
  CHECK(r.data()[0] == 0.0f);
  CHECK(r.data()[1] == 3.5f);
  CHECK(r.data()[2] == doctest::Approx(-0.2).epsilon(1e-7));
}

TEST_CASE("global average pool") {
  const Tensor4 pooled = global_avg_pool(Tensor4({1, 3, 19, 19}, 0.25f));
  CHECK(pooled.shape() == Shape4{1, 3, 1, 1});
  for (float v : pooled.data()) CHECK(v == 0.25f);

  Tensor4 t({1, 1, 2, 2});
  t.data()[0] = 1;
  t.data()[1] = 2;
  t.data()[2] = 3;
  t.data()[3] = 4;
  CHECK(global_avg_pool(t).data()[0] == 2.5f);

  const Tensor4 r = random_tensor({2, 5, 17, 11}, 21);
  const Tensor4 g = global_avg_pool(r);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 5; ++c) {
      long double sum = 0;
      for (int y = 0; y < 17; ++y)
        for (int x = 0; x < 11; ++x) sum += r.at(n, c, y, x);
      CHECK(std::abs(g.at(n, c, 0, 0) - static_cast<double>(sum / (17 * 11))) <= 1e-6);
    }
  }
}

TEST_CASE("fully connected") {
  const std::vector<float> in{3.0f, 4.0f};
  const auto id = fully_connected(in, Matrix::identity(2), std::vector<float>{0, 0});
  CHECK(id == in);
  const std::vector<float> b{5.0f, -1.0f};
  CHECK(fully_connected(in, Matrix(2, 2), b) == b);
  Matrix w(1, 2);
  w(0, 0) = 1;
  w(0, 1) = 2;
  CHECK(fully_connected(in, w, std::vector<float>{1}) == std::vector<float>{12.0f});
  CHECK_THROWS_AS(fully_connected(in, Matrix(1, 3), std::vector<float>{1}), ConfigError);
}

TEST_CASE("sigmoid, channel scale, elementwise add") {
  CHECK(sigmoid(0.0f) == 0.5f);
  const Tensor4 x = random_tensor({1, 3, 4, 4}, 2);
  CHECK(channel_scale(x, std::vector<float>{1, 1, 1}) == x);
  CHECK_THROWS_AS(channel_scale(x, std::vector<float>{1, 1}), ConfigError);
  CHECK(elementwise_add(x, Tensor4(x.shape())) == x);
  CHECK_THROWS_AS(elementwise_add(x, Tensor4({1, 3, 4, 5})), ConfigError);
}

TEST_CASE("kernel outputs stay finite") {
  const Tensor4 x = random_tensor({1, 4, 10, 10}, 77);
  const ConvParams p = random_conv(4, 4, 3, 1, 78);
  Tensor4 y = conv2d(x, p);
  batch_norm_infer_inplace(y, p);
  leaky_relu_inplace(y);
  CHECK(y.all_finite());
  CHECK(global_avg_pool(y).all_finite());
}
