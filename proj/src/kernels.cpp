#include "adas/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "adas/errors.hpp"

namespace adas {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << "," << c << "," << h << "," << w << ")";
  return os.str();
}

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape) {
  if (!shape.valid()) {
    throw InputError("tensor shape must be positive in every dim, got " +
                     shape.str());
  }
  data_.assign(shape.count(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (!shape.valid()) {
    throw InputError("tensor shape must be positive in every dim, got " +
                     shape.str());
  }
  if (data_.size() != shape.count()) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape.str());
  }
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

ConvParams ConvParams::identity_bn(int in, int out, int k, int stride) {
  ConvParams p;
  p.out_channels = out;
  p.kernel_size = k;
  p.stride = stride;
  p.weights = Tensor4({out, in, k, k});
  p.bn_scale.assign(out, 1.0f);
  p.bn_bias.assign(out, 0.0f);
  p.bn_mean.assign(out, 0.0f);
  p.bn_var.assign(out, 1.0f);
  return p;
}

int same_output_size(int in, int stride) { return (in + stride - 1) / stride; }

namespace {

void check_conv(const Tensor4& input, const ConvParams& p) {
  if (p.kernel_size != 1 && p.kernel_size != 3) {
    throw ConfigError("conv kernel size must be 1 or 3");
  }
  if (p.stride != 1 && p.stride != 2) {
    throw ConfigError("conv stride must be 1 or 2");
  }
  const Shape4& ws = p.weights.shape();
  if (ws.n != p.out_channels || ws.h != p.kernel_size ||
      ws.w != p.kernel_size) {
    throw ConfigError("conv weights " + ws.str() +
                      " inconsistent with out_channels/kernel_size");
  }
  if (ws.c != input.c()) {
    throw ConfigError("conv expects " + std::to_string(ws.c) +
                      " input channels, got " + std::to_string(input.c()));
  }
}

void check_bn(const ConvParams& p, int channels) {
  const auto n = static_cast<std::size_t>(channels);
  if (p.bn_scale.size() != n || p.bn_bias.size() != n ||
      p.bn_mean.size() != n || p.bn_var.size() != n) {
    throw ConfigError("batch-norm vectors must have " +
                      std::to_string(channels) + " entries");
  }
  if (!(p.bn_eps > 0.0f)) {
    throw ConfigError("batch-norm eps must be positive");
  }
  for (float v : p.bn_var) {
    if (!(v >= 0.0f)) throw ConfigError("batch-norm variance must be >= 0");
  }
}

// Padded input split into stride x stride phase planes:
// phase(py,px)[i][j] = padded[i*stride + py][j*stride + px]. Each tap of the
// kernel then reads one phase plane at a fixed offset, so the inner loop is
// a single contiguous run over a block of output rows.
struct PhasePlanes {
  int stride = 1;
  int rows = 0;  // rows per phase plane, plus one spare row
  int cols = 0;
  std::size_t plane = 0;
  std::vector<float> data;  // [ic][py][px][rows][cols]

  const float* at(int ic, int py, int px) const {
    return data.data() +
           ((static_cast<std::size_t>(ic) * stride + py) * stride + px) * plane;
  }
};

PhasePlanes split_phases(const float* in, int in_c, int in_h, int in_w, int k,
                         int stride) {
  const int pad = k / 2;
  const int hp = in_h + 2 * pad;
  const int wp = in_w + 2 * pad;
  PhasePlanes ph;
  ph.stride = stride;
  ph.rows = (hp + stride - 1) / stride + 1;
  ph.cols = (wp + stride - 1) / stride;
  ph.plane = static_cast<std::size_t>(ph.rows) * ph.cols;
  ph.data.assign(static_cast<std::size_t>(in_c) * stride * stride * ph.plane,
                 0.0f);
  const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
  for (int ic = 0; ic < in_c; ++ic) {
    const float* src = in + ic * in_plane;
    for (int y = 0; y < in_h; ++y) {
      const int yp = y + pad;
      for (int x = 0; x < in_w; ++x) {
        const int xp = x + pad;
        float* dst = const_cast<float*>(ph.at(ic, yp % stride, xp % stride));
        dst[static_cast<std::size_t>(yp / stride) * ph.cols + xp / stride] =
            src[static_cast<std::size_t>(y) * in_w + x];
      }
    }
  }
  return ph;
}

// One output channel. Accumulates (ic, ky, kx) in that order for every
// output element; the order does not depend on blocking or threading.
void conv_channel(const PhasePlanes& ph, int in_c, const float* weights, int k,
                  float* out, int out_h, int out_w) {
  const int s = ph.stride;
  const int cols = ph.cols;
  const int block_rows = std::max(1, 4096 / cols);
  std::vector<double> acc(static_cast<std::size_t>(block_rows) * cols);

  for (int oy0 = 0; oy0 < out_h; oy0 += block_rows) {
    const int rows = std::min(block_rows, out_h - oy0);
    const std::size_t span = static_cast<std::size_t>(rows) * cols;
    std::fill(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(span), 0.0);
    double* a = acc.data();
    for (int ic = 0; ic < in_c; ++ic) {
      const float* wk = weights + static_cast<std::size_t>(ic) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = wk[ky * k + kx];
          const float* src = ph.at(ic, ky % s, kx % s) +
                             static_cast<std::size_t>(oy0 + ky / s) * cols + kx / s;
          for (std::size_t i = 0; i < span; ++i) {
            a[i] += wv * static_cast<double>(src[i]);
          }
        }
      }
    }
    for (int r = 0; r < rows; ++r) {
      const double* row = a + static_cast<std::size_t>(r) * cols;
      float* o = out + static_cast<std::size_t>(oy0 + r) * out_w;
      for (int ox = 0; ox < out_w; ++ox) o[ox] = static_cast<float>(row[ox]);
    }
  }
}

}  // namespace

Tensor4 conv2d(const Tensor4& input, const ConvParams& p,
               const ExecOptions& exec) {
  check_conv(input, p);
  const int out_h = same_output_size(input.h(), p.stride);
  const int out_w = same_output_size(input.w(), p.stride);
  Tensor4 out({input.n(), p.out_channels, out_h, out_w});

  const int workers = std::max(1, exec.workers);
  const std::size_t kk = static_cast<std::size_t>(p.kernel_size) *
                         p.kernel_size * input.c();
  for (int n = 0; n < input.n(); ++n) {
    const PhasePlanes ph = split_phases(input.channel(n, 0).data(), input.c(),
                                        input.h(), input.w(), p.kernel_size,
                                        p.stride);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int oc = 0; oc < p.out_channels; ++oc) {
      conv_channel(ph, input.c(),
                   p.weights.data().data() + static_cast<std::size_t>(oc) * kk,
                   p.kernel_size, out.channel(n, oc).data(), out_h, out_w);
    }
  }
  return out;
}

void batch_norm_infer_inplace(Tensor4& t, const ConvParams& p) {
  check_bn(p, t.c());
  for (int n = 0; n < t.n(); ++n) {
    for (int c = 0; c < t.c(); ++c) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(p.bn_var[c]) +
                                         static_cast<double>(p.bn_eps));
      const double mul = p.bn_scale[c] * inv;
      const double add = p.bn_bias[c] - p.bn_mean[c] * mul;
      for (float& v : t.channel(n, c)) {
        v = static_cast<float>(v * mul + add);
      }
    }
  }
}

Tensor4 batch_norm_infer(const Tensor4& input, const ConvParams& p) {
  Tensor4 out = input;
  batch_norm_infer_inplace(out, p);
  return out;
}

void leaky_relu_inplace(Tensor4& t, float alpha) {
  for (float& v : t.data()) {
    if (v < 0.0f) v *= alpha;
  }
}

Tensor4 leaky_relu(const Tensor4& input, float alpha) {
  Tensor4 out = input;
  leaky_relu_inplace(out, alpha);
  return out;
}

Tensor4 global_avg_pool(const Tensor4& input) {
  Tensor4 out({input.n(), input.c(), 1, 1});
  const double count = static_cast<double>(input.shape().plane());
  for (int n = 0; n < input.n(); ++n) {
    for (int c = 0; c < input.c(); ++c) {
      double sum = 0.0;
      for (float v : input.channel(n, c)) sum += v;
      out.at(n, c, 0, 0) = static_cast<float>(sum / count);
    }
  }
  return out;
}

std::vector<float> fully_connected(std::span<const float> input,
                                   const Matrix& weights,
                                   std::span<const float> bias) {
  if (static_cast<std::size_t>(weights.cols) != input.size() ||
      static_cast<std::size_t>(weights.rows) != bias.size() ||
      weights.data.size() != static_cast<std::size_t>(weights.rows) * weights.cols) {
    throw ConfigError("fully_connected: " + std::to_string(weights.rows) + "x" +
                      std::to_string(weights.cols) + " weights vs input " +
                      std::to_string(input.size()) + ", bias " +
                      std::to_string(bias.size()));
  }
  std::vector<float> out(bias.size());
  for (int r = 0; r < weights.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < weights.cols; ++c) {
      sum += static_cast<double>(weights(r, c)) * input[c];
    }
    out[r] = static_cast<float>(sum + bias[r]);
  }
  return out;
}

float sigmoid(float x) {
  return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
}

std::vector<float> relu(std::span<const float> v) {
  std::vector<float> out(v.begin(), v.end());
  for (float& x : out) x = std::max(x, 0.0f);
  return out;
}

Tensor4 channel_scale(const Tensor4& input, std::span<const float> gates) {
  const auto c = static_cast<std::size_t>(input.c());
  const bool per_sample = gates.size() == c * input.n();
  if (gates.size() != c && !per_sample) {
    throw ConfigError("channel_scale: " + std::to_string(gates.size()) +
                      " gates for " + std::to_string(c) + " channels");
  }
  Tensor4 out = input;
  for (int n = 0; n < input.n(); ++n) {
    for (int ch = 0; ch < input.c(); ++ch) {
      const float g = gates[per_sample ? n * c + ch : ch];
      for (float& v : out.channel(n, ch)) v *= g;
    }
  }
  return out;
}

Tensor4 elementwise_add(const Tensor4& a, const Tensor4& b) {
  if (a.shape() != b.shape()) {
    throw ConfigError("elementwise_add shape mismatch " + a.shape().str() +
                      " vs " + b.shape().str());
  }
  Tensor4 out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

}  // namespace adas
