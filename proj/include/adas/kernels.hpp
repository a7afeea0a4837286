#pragma once

#include <span>
#include <vector>

#include "adas/tensor.hpp"

namespace adas {

/// Convolution weights plus the inference-time batch-norm that follows it.
/// There is no separate conv bias; it lives in bn_bias.
struct ConvParams {
  int out_channels = 0;
  int kernel_size = 3;  // 1 or 3
  int stride = 1;       // 1 or 2
  Tensor4 weights;      // [out][in][k][k]
  std::vector<float> bn_scale;
  std::vector<float> bn_bias;
  std::vector<float> bn_mean;
  std::vector<float> bn_var;
  float bn_eps = 1e-5f;

  int in_channels() const { return weights.c(); }
  /// Sized for (in -> out), weights zero, BN set to the identity transform.
  static ConvParams identity_bn(int in, int out, int k, int stride);
};

/// Kernel execution knobs. Results never depend on `workers`.
struct ExecOptions {
  int workers = 1;
};

int same_output_size(int in, int stride);

/// "Same"-padded convolution (pad 1 for 3x3, 0 for 1x1); no bias, no
/// activation. Sums are accumulated in double in a fixed order.
Tensor4 conv2d(const Tensor4& input, const ConvParams& p,
               const ExecOptions& exec = {});

Tensor4 batch_norm_infer(const Tensor4& input, const ConvParams& p);
void batch_norm_infer_inplace(Tensor4& t, const ConvParams& p);

Tensor4 leaky_relu(const Tensor4& input, float alpha = 0.1f);
void leaky_relu_inplace(Tensor4& t, float alpha = 0.1f);

/// (n,c,h,w) -> (n,c,1,1) spatial mean.
Tensor4 global_avg_pool(const Tensor4& input);

std::vector<float> fully_connected(std::span<const float> input,
                                   const Matrix& weights,
                                   std::span<const float> bias);

float sigmoid(float x);
std::vector<float> relu(std::span<const float> v);

Tensor4 channel_scale(const Tensor4& input, std::span<const float> gates);
Tensor4 elementwise_add(const Tensor4& a, const Tensor4& b);

}  // namespace adas
