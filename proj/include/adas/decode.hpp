#pragma once

#include <vector>

#include "adas/anchors.hpp"
#include "adas/boxes.hpp"
#include "adas/tensor.hpp"

namespace adas {

/// Geometry logits (tx, ty, tw, th) for one anchor slot.
struct BoxLogits {
  float tx = 0.0f;
  float ty = 0.0f;
  float tw = 0.0f;
  float th = 0.0f;
};

/// Anchors scaled from the 608 reference to the actual input size.
AnchorSet scale_anchors(const AnchorSet& anchors, int input_size);

/// YOLOv2 decoding of a raw head tensor laid out anchor-major:
/// channel a*(5+C) + {tx, ty, tw, th, to, class0..}. Per-class sigmoid;
/// score = sigmoid(to) * max_c sigmoid(class_c). Keeps score >= threshold.
/// Boxes are in input pixels, clipped to [0, input_size].
std::vector<Detection> decode(const Tensor4& head, const AnchorSet& anchors,
                              int input_size, float conf_threshold = 0.25f);

/// Inverse of the geometry part of decode for the cell containing the box
/// center. `anchor` is already at the input scale.
struct EncodedBox {
  int cell_x = 0;
  int cell_y = 0;
  BoxLogits logits;
};
EncodedBox encode_box(const Box& box, const Anchor& anchor, float stride);

/// Geometry half of decode for a single slot (no clipping).
Box decode_box(const BoxLogits& t, int cell_x, int cell_y, const Anchor& anchor,
               float stride);

}  // namespace adas
