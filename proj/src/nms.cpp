#include "adas/boxes.hpp"

#include <algorithm>
#include <tuple>

#include "adas/errors.hpp"

namespace adas {

double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) throw InputError("iou of a degenerate box");
  const double ix = std::min<double>(a.x_max, b.x_max) - std::max<double>(a.x_min, b.x_min);
  const double iy = std::min<double>(a.y_max, b.y_max) - std::max<double>(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

bool detection_order(const Detection& a, const Detection& b) {
  return std::tie(b.score, a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max,
                  a.category) <
         std::tie(a.score, b.box.x_min, b.box.y_min, b.box.x_max, b.box.y_max,
                  b.category);
}

std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold) {
  if (!(iou_threshold > 0.0f && iou_threshold <= 1.0f)) {
    throw ConfigError("NMS IoU threshold must be in (0, 1]");
  }
  std::stable_sort(dets.begin(), dets.end(), detection_order);
  std::vector<Detection> kept;
  std::vector<bool> dropped(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dropped[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!dropped[j] && dets[j].category == dets[i].category &&
          iou(dets[i].box, dets[j].box) > iou_threshold) {
        dropped[j] = true;
      }
    }
  }
  return kept;
}

}  // namespace adas
