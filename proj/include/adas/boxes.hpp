#pragma once

#include <vector>

namespace adas {

/// Axis-aligned box in continuous pixel coordinates.
struct Box {
  float x_min = 0.0f;
  float y_min = 0.0f;
  float x_max = 0.0f;
  float y_max = 0.0f;

  float width() const { return x_max - x_min; }
  float height() const { return y_max - y_min; }
  double area() const {
    return static_cast<double>(x_max - x_min) * (y_max - y_min);
  }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  Box box;
  float score = 0.0f;
  int category = 0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Intersection over union. Throws InputError for degenerate boxes.
double iou(const Box& a, const Box& b);

/// Descending score, then smaller x_min, then smaller y_min.
bool detection_order(const Detection& a, const Detection& b);

/// Greedy same-category suppression: survivors sorted by detection_order,
/// and no survivor pair of one category overlaps by more than iou_threshold.
std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold = 0.45f);

}  // namespace adas
