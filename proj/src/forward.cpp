#include "adas/network.hpp"

#include <chrono>
#include <map>

#include "adas/errors.hpp"

namespace adas {

Tensor4 se_block(const Tensor4& input, const SeParams& se) {
  const int c = input.c();
  if (se.reduction < 1 || c % se.reduction != 0) {
    throw ConfigError("SE reduction " + std::to_string(se.reduction) +
                      " does not divide " + std::to_string(c) + " channels");
  }
  const int mid = c / se.reduction;
  if (se.fc1_w.rows != mid || se.fc1_w.cols != c || se.fc2_w.rows != c ||
      se.fc2_w.cols != mid) {
    throw ConfigError("SE weights do not match " + std::to_string(c) +
                      " channels at reduction " + std::to_string(se.reduction));
  }
  const Tensor4 pooled = global_avg_pool(input);
  std::vector<float> gates;
  gates.reserve(static_cast<std::size_t>(input.n()) * c);
  for (int n = 0; n < input.n(); ++n) {
    const auto squeezed = pooled.data().subspan(static_cast<std::size_t>(n) * c, c);
    const auto hidden = relu(fully_connected(squeezed, se.fc1_w, se.fc1_b));
    for (float g : fully_connected(hidden, se.fc2_w, se.fc2_b)) {
      gates.push_back(sigmoid(g));
    }
  }
  return channel_scale(input, gates);
}

Backbone17Det::Backbone17Det(NetworkSpec spec, const WeightStore& store)
    : spec_(std::move(spec)), weights_(bind_weights(spec_, store)) {
  validate();
}

Backbone17Det::Backbone17Det(NetworkSpec spec, NetworkWeights weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  validate();
}

void Backbone17Det::validate() const {
  if (weights_.layers.size() != spec_.layers.size()) {
    throw ConfigError("weights cover " + std::to_string(weights_.layers.size()) +
                      " layers, network has " + std::to_string(spec_.layers.size()));
  }
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerWeights& lw = weights_.layers[i];
    if (lw.convs.size() != l.convs.size() || lw.se.has_value() != l.se) {
      throw ConfigError("weights for layer " + std::to_string(l.index) +
                        " do not match its op list");
    }
    for (std::size_t j = 0; j < l.convs.size(); ++j) {
      const ConvSpec& cs = l.convs[j];
      const ConvParams& p = lw.convs[j];
      if (p.out_channels != cs.out_channels || p.kernel_size != cs.kernel_size ||
          p.stride != cs.stride || p.weights.c() != cs.in_channels) {
        throw ConfigError("conv " + std::to_string(j) + " of layer " +
                          std::to_string(l.index) + " does not match the network");
      }
    }
  }
  if (spec_.has_head() != weights_.head.has_value()) {
    throw ConfigError("head weights present/absent mismatch");
  }
  if (weights_.head &&
      (weights_.head->conv.out_channels != spec_.head_out_channels() ||
       weights_.head->bias.size() !=
           static_cast<std::size_t>(spec_.head_out_channels()))) {
    throw ConfigError("head weights do not match anchors*(5+classes)");
  }
}

Tensor4 Backbone17Det::forward(const Tensor4& image, const ExecOptions& exec,
                               const ForwardObserver& observer) const {
  if (image.n() != 1 || image.c() != spec_.input_channels ||
      image.h() != image.w()) {
    throw InputError("forward expects a (1," + std::to_string(spec_.input_channels) +
                     ",s,s) image, got " + image.shape().str());
  }
  validate_input_size(image.h());

  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  // Outputs of layers that a later residual add reads.
  std::map<int, Tensor4> saved;
  for (const LayerSpec& l : spec_.layers) {
    if (l.residual_from) saved.emplace(*l.residual_from, Tensor4{});
  }

  Tensor4 x = image;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const LayerWeights& lw = weights_.layers[i];
    const auto t0 = Clock::now();

    for (const ConvParams& p : lw.convs) {
      x = conv2d(x, p, exec);
      batch_norm_infer_inplace(x, p);
      leaky_relu_inplace(x, spec_.leaky_alpha);
    }
    if (l.residual_from) {
      x = elementwise_add(x, saved.at(*l.residual_from));
    }
    Tensor4 pre_se;
    if (lw.se) {
      if (observer) pre_se = x;
      x = se_block(x, *lw.se);
    }
    if (auto it = saved.find(l.index); it != saved.end()) it->second = x;

    if (observer) {
      const double ms = ms_since(t0);
      observer({l.index, x, lw.se ? &pre_se : nullptr, ms});
    }
  }

  if (!weights_.head) return x;
  const auto t0 = Clock::now();
  Tensor4 out = conv2d(x, weights_.head->conv, exec);
  for (int c = 0; c < out.c(); ++c) {
    const float b = weights_.head->bias[c];
    for (float& v : out.channel(0, c)) v += b;
  }
  if (observer) observer({0, out, nullptr, ms_since(t0)});
  return out;
}

Tensor4 forward(const NetworkSpec& net, const WeightStore& store,
                const Tensor4& image, const ExecOptions& exec) {
  return Backbone17Det(net, store).forward(image, exec);
}

}  // namespace adas
