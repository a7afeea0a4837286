#include "adas/decode.hpp"

#include <algorithm>
#include <cmath>

#include "adas/errors.hpp"
#include "adas/kernels.hpp"

namespace adas {

AnchorSet scale_anchors(const AnchorSet& anchors, int input_size) {
  const float k = static_cast<float>(input_size) / kReferenceInput;
  AnchorSet out = anchors;
  for (Anchor& a : out) {
    a.w *= k;
    a.h *= k;
  }
  return out;
}

Box decode_box(const BoxLogits& t, int cell_x, int cell_y, const Anchor& anchor,
               float stride) {
  const double cx = (cell_x + static_cast<double>(sigmoid(t.tx))) * stride;
  const double cy = (cell_y + static_cast<double>(sigmoid(t.ty))) * stride;
  const double w = anchor.w * std::exp(static_cast<double>(t.tw));
  const double h = anchor.h * std::exp(static_cast<double>(t.th));
  return {static_cast<float>(cx - w / 2), static_cast<float>(cy - h / 2),
          static_cast<float>(cx + w / 2), static_cast<float>(cy + h / 2)};
}

std::vector<Detection> decode(const Tensor4& head, const AnchorSet& anchors,
                              int input_size, float conf_threshold) {
  validate_anchors(anchors);
  const int na = static_cast<int>(anchors.size());
  if (head.c() % na != 0 || head.c() / na < 6) {
    throw ConfigError("head has " + std::to_string(head.c()) +
                      " channels, not a multiple of anchors*(5+C) for " +
                      std::to_string(na) + " anchors");
  }
  if (head.n() != 1 || head.h() != head.w() || input_size % head.w() != 0) {
    throw ConfigError("head grid " + head.shape().str() +
                      " does not divide input size " + std::to_string(input_size));
  }
  const int per_anchor = head.c() / na;
  const int classes = per_anchor - 5;
  const int grid = head.w();
  const float stride = static_cast<float>(input_size) / grid;
  const auto scaled = scale_anchors(anchors, input_size);
  const float limit = static_cast<float>(input_size);

  std::vector<Detection> out;
  for (int cy = 0; cy < grid; ++cy) {
    for (int cx = 0; cx < grid; ++cx) {
      for (int a = 0; a < na; ++a) {
        const int base = a * per_anchor;
        auto logit = [&](int k) { return head.at(0, base + k, cy, cx); };
        int best = 0;
        float best_p = -1.0f;
        for (int c = 0; c < classes; ++c) {
          const float p = sigmoid(logit(5 + c));
          if (p > best_p) {
            best_p = p;
            best = c;
          }
        }
        const float score = sigmoid(logit(4)) * best_p;
        if (!(score >= conf_threshold)) continue;
        Box b = decode_box({logit(0), logit(1), logit(2), logit(3)}, cx, cy,
                           scaled[a], stride);
        b.x_min = std::clamp(b.x_min, 0.0f, limit);
        b.y_min = std::clamp(b.y_min, 0.0f, limit);
        b.x_max = std::clamp(b.x_max, 0.0f, limit);
        b.y_max = std::clamp(b.y_max, 0.0f, limit);
        if (!b.valid()) continue;
        out.push_back({b, std::min(score, 1.0f), best});
      }
    }
  }
  return out;
}

EncodedBox encode_box(const Box& box, const Anchor& anchor, float stride) {
  if (!box.valid() || !(anchor.w > 0.0f) || !(anchor.h > 0.0f) || !(stride > 0.0f)) {
    throw InputError("encode_box needs a non-degenerate box, anchor and stride");
  }
  const double cx = (static_cast<double>(box.x_min) + box.x_max) / 2 / stride;
  const double cy = (static_cast<double>(box.y_min) + box.y_max) / 2 / stride;
  EncodedBox e;
  e.cell_x = static_cast<int>(std::floor(cx));
  e.cell_y = static_cast<int>(std::floor(cy));
  const double fx = cx - e.cell_x;
  const double fy = cy - e.cell_y;
  // offsets exactly on the cell edge have no finite sigmoid preimage
  if (fx <= 0.0 || fy <= 0.0) {
    throw InputError("encode_box: box center lies on a cell boundary");
  }
  e.logits.tx = static_cast<float>(std::log(fx / (1.0 - fx)));
  e.logits.ty = static_cast<float>(std::log(fy / (1.0 - fy)));
  e.logits.tw = static_cast<float>(std::log(box.width() / static_cast<double>(anchor.w)));
  e.logits.th = static_cast<float>(std::log(box.height() / static_cast<double>(anchor.h)));
  return e;
}

}  // namespace adas
