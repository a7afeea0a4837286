#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adas/anchors.hpp"
#include "adas/tensor.hpp"

namespace adas {

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 3;
  int stride = 1;
};

/// One numbered backbone layer. Ops run in the order: conv stack,
/// residual add (if any), SE (if any).
struct LayerSpec {
  int index = 0;
  std::vector<ConvSpec> convs;
  std::optional<int> residual_from;  // layer whose output is added
  bool se = false;
  int declared_resolution = 0;  // output side length at a 608 input

  int out_channels() const { return convs.back().out_channels; }
  int stride() const;
};

struct NetworkSpec {
  int input_channels = 3;
  std::vector<LayerSpec> layers;
  int se_reduction = 16;
  AnchorSet anchors;
  int num_classes = 0;
  float leaky_alpha = 0.1f;

  bool has_head() const { return !anchors.empty() && num_classes > 0; }
  int head_in_channels() const;
  int head_out_channels() const {
    return static_cast<int>(anchors.size()) * (5 + num_classes);
  }
  const LayerSpec& layer(int index) const;
  /// Total downsampling factor of the backbone (32 for Backbone17).
  int total_stride() const;
};

/// Backbone17-Det: 17 numbered layers (18 convolutions), SE after layers
/// 5, 8, 13 and 17, one residual per multi-conv resolution level, and a
/// 1x1 detection head.
NetworkSpec build_backbone17(int num_classes, AnchorSet anchors,
                             int se_reduction = 16);

struct PlannedShape {
  std::string name;  // "layer01".."layer17", "head"
  int layer = 0;     // 1..17; 0 for the head
  Shape4 shape;
};

inline constexpr int kMinInputSize = 320;
inline constexpr int kMaxInputSize = 608;

/// Throws InputError unless size is a multiple of 32 in [320, 608].
void validate_input_size(int input_size);

std::vector<PlannedShape> shape_plan(const NetworkSpec& net, int input_size);

/// Name and element count of every parameter blob, in weight-file order.
struct BlobSpec {
  std::string name;
  std::uint64_t count = 0;
};
std::vector<BlobSpec> blob_layout(const NetworkSpec& net);

std::uint64_t count_parameters(const NetworkSpec& net);

}  // namespace adas
