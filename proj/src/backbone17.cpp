#include "adas/backbone17.hpp"

#include <cstdio>

#include "adas/errors.hpp"
#include "adas/kernels.hpp"

namespace adas {

int LayerSpec::stride() const {
  int s = 1;
  for (const ConvSpec& c : convs) s *= c.stride;
  return s;
}

int NetworkSpec::head_in_channels() const {
  return layers.empty() ? input_channels : layers.back().out_channels();
}

const LayerSpec& NetworkSpec::layer(int index) const {
  for (const LayerSpec& l : layers) {
    if (l.index == index) return l;
  }
  throw ConfigError("network has no layer " + std::to_string(index));
}

int NetworkSpec::total_stride() const {
  int s = 1;
  for (const LayerSpec& l : layers) s *= l.stride();
  return s;
}

NetworkSpec build_backbone17(int num_classes, AnchorSet anchors,
                             int se_reduction) {
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (se_reduction < 1) throw ConfigError("SE reduction must be >= 1");
  validate_anchors(anchors);

  NetworkSpec net;
  net.num_classes = num_classes;
  net.anchors = std::move(anchors);
  net.se_reduction = se_reduction;

  int channels = net.input_channels;
  auto conv = [&channels](int out, int k, int stride = 1) {
    ConvSpec c{channels, out, k, stride};
    channels = out;
    return c;
  };
  auto add = [&net](int index, std::vector<ConvSpec> convs, int resolution,
                    std::optional<int> residual_from = std::nullopt,
                    bool se = false) {
    net.layers.push_back({index, std::move(convs), residual_from, se,
                          resolution});
  };

  add(1, {conv(32, 3)}, 608);
  add(2, {conv(64, 3, 2)}, 304);
  add(3, {conv(128, 3, 2)}, 152);
  add(4, {conv(64, 1), conv(128, 3)}, 152);
  add(5, {conv(128, 3)}, 152, 3, true);
  add(6, {conv(256, 3, 2)}, 76);
  add(7, {conv(128, 1)}, 76);
  add(8, {conv(256, 3)}, 76, 6, true);
  add(9, {conv(512, 3, 2)}, 38);
  add(10, {conv(256, 1)}, 38);
  add(11, {conv(512, 3)}, 38);
  add(12, {conv(256, 1)}, 38);
  add(13, {conv(512, 3)}, 38, 9, true);
  add(14, {conv(1024, 3, 2)}, 19);
  add(15, {conv(512, 1)}, 19);
  add(16, {conv(1024, 3)}, 19);
  add(17, {conv(1024, 3)}, 19, 14, true);

  for (const LayerSpec& l : net.layers) {
    if (l.se && l.out_channels() % se_reduction != 0) {
      throw ConfigError("SE reduction " + std::to_string(se_reduction) +
                        " does not divide " +
                        std::to_string(l.out_channels()) + " channels");
    }
  }
  return net;
}

void validate_input_size(int input_size) {
  if (input_size % 32 != 0 || input_size < kMinInputSize ||
      input_size > kMaxInputSize) {
    throw InputError("input size " + std::to_string(input_size) +
                     " must be a multiple of 32 in [320, 608]");
  }
}

std::vector<PlannedShape> shape_plan(const NetworkSpec& net, int input_size) {
  validate_input_size(input_size);
  std::vector<PlannedShape> plan;
  Shape4 s{1, net.input_channels, input_size, input_size};
  for (const LayerSpec& l : net.layers) {
    for (const ConvSpec& c : l.convs) {
      if (c.in_channels != s.c) {
        throw ConfigError("layer " + std::to_string(l.index) +
                          " expects " + std::to_string(c.in_channels) +
                          " channels, receives " + std::to_string(s.c));
      }
      s = {1, c.out_channels, same_output_size(s.h, c.stride),
           same_output_size(s.w, c.stride)};
    }
    char name[16];
    std::snprintf(name, sizeof name, "layer%02d", l.index);
    plan.push_back({name, l.index, s});
  }
  if (net.has_head()) {
    plan.push_back({"head", 0, {1, net.head_out_channels(), s.h, s.w}});
  }
  return plan;
}

std::vector<BlobSpec> blob_layout(const NetworkSpec& net) {
  std::vector<BlobSpec> blobs;
  char prefix[32];
  for (const LayerSpec& l : net.layers) {
    for (std::size_t j = 0; j < l.convs.size(); ++j) {
      const ConvSpec& c = l.convs[j];
      std::snprintf(prefix, sizeof prefix, "l%02d.conv%zu.", l.index, j);
      const std::string p = prefix;
      const auto out = static_cast<std::uint64_t>(c.out_channels);
      blobs.push_back({p + "weights", out * c.in_channels * c.kernel_size *
                                          c.kernel_size});
      for (const char* bn : {"bn_scale", "bn_bias", "bn_mean", "bn_var"}) {
        blobs.push_back({p + bn, out});
      }
    }
    if (l.se) {
      std::snprintf(prefix, sizeof prefix, "l%02d.se.", l.index);
      const std::string p = prefix;
      const auto c = static_cast<std::uint64_t>(l.out_channels());
      const std::uint64_t mid = c / net.se_reduction;
      blobs.push_back({p + "fc1_w", mid * c});
      blobs.push_back({p + "fc1_b", mid});
      blobs.push_back({p + "fc2_w", c * mid});
      blobs.push_back({p + "fc2_b", c});
    }
  }
  if (net.has_head()) {
    const auto out = static_cast<std::uint64_t>(net.head_out_channels());
    blobs.push_back({"head.weights", out * net.head_in_channels()});
    blobs.push_back({"head.bias", out});
  }
  return blobs;
}

std::uint64_t count_parameters(const NetworkSpec& net) {
  std::uint64_t total = 0;
  for (const BlobSpec& b : blob_layout(net)) total += b.count;
  return total;
}

}  // namespace adas
