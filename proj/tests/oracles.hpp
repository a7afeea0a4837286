// Independent reference computations shared by the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "adas/boxes.hpp"
#include "adas/light.hpp"

namespace oracle {

/// Box with corners on an integer grid of `cells_per_px` cells per pixel.
struct GridBox {
  int x0, y0, x1, y1;
  adas::Box to_box(int cells_per_px) const {
    const float s = static_cast<float>(cells_per_px);
    return {x0 / s, y0 / s, x1 / s, y1 / s};
  }
};

/// IoU by counting grid cells covered by each box.
inline double raster_iou(const GridBox& a, const GridBox& b) {
  const int lo_x = std::min(a.x0, b.x0), hi_x = std::max(a.x1, b.x1);
  const int lo_y = std::min(a.y0, b.y0), hi_y = std::max(a.y1, b.y1);
  std::int64_t inter = 0, uni = 0;
  for (int y = lo_y; y < hi_y; ++y) {
    for (int x = lo_x; x < hi_x; ++x) {
      const bool in_a = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
      const bool in_b = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline GridBox random_grid_box(std::mt19937_64& rng, int extent) {
  std::uniform_int_distribution<int> pos(0, extent - 2);
  GridBox g{};
  g.x0 = pos(rng);
  g.y0 = pos(rng);
  g.x1 = std::uniform_int_distribution<int>(g.x0 + 1, extent)(rng);
  g.y1 = std::uniform_int_distribution<int>(g.y0 + 1, extent)(rng);
  return g;
}

/// AP = (1/G) * sum over TP ranks k of max_{j >= k} precision(prefix j),
/// with every prefix precision recounted from scratch.
inline double brute_force_ap(const std::vector<bool>& flags, int total_gt) {
  const std::size_t n = flags.size();
  std::vector<double> prec(n);
  for (std::size_t j = 0; j < n; ++j) {
    int tp = 0;
    for (std::size_t i = 0; i <= j; ++i) tp += flags[i] ? 1 : 0;
    prec[j] = static_cast<double>(tp) / static_cast<double>(j + 1);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!flags[k]) continue;
    double best = 0.0;
    for (std::size_t j = k; j < n; ++j) best = std::max(best, prec[j]);
    sum += best;
  }
  return sum / total_gt;
}

/// Plain greedy suppression written without sorting helpers.
inline std::vector<adas::Detection> naive_nms(std::vector<adas::Detection> dets, double thr) {
  std::vector<adas::Detection> kept;
  std::vector<bool> alive(dets.size(), true);
  while (true) {
    int best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (!alive[i]) continue;
      if (best < 0) {
        best = static_cast<int>(i);
        continue;
      }
      const auto& a = dets[i];
      const auto& b = dets[best];
      const bool better = a.score > b.score ||
                          (a.score == b.score && (a.box.x_min < b.box.x_min ||
                                                  (a.box.x_min == b.box.x_min && a.box.y_min < b.box.y_min)));
      if (better) best = static_cast<int>(i);
    }
    if (best < 0) break;
    alive[best] = false;
    kept.push_back(dets[best]);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && dets[i].category == dets[best].category &&
          adas::iou(dets[i].box, dets[best].box) > thr)
        alive[i] = false;
    }
  }
  return kept;
}

struct SimWarning {
  std::int64_t frame;
  adas::LightCondition previous;
  adas::LightCondition next;
  friend bool operator==(const SimWarning&, const SimWarning&) = default;
};

/// Step-by-step debounce reference: the first frame confirms; a different
/// condition must repeat `n` frames in a row to be confirmed with a warning.
inline std::vector<SimWarning> simulate_monitor(const std::vector<adas::LightCondition>& stream, int n) {
  std::vector<SimWarning> out;
  std::optional<adas::LightCondition> confirmed;
  std::optional<adas::LightCondition> candidate;
  int streak = 0;
  for (std::size_t f = 0; f < stream.size(); ++f) {
    const adas::LightCondition c = stream[f];
    if (!confirmed) {
      confirmed = c;
      continue;
    }
    if (c == *confirmed) {
      candidate.reset();
      streak = 0;
      continue;
    }
    if (candidate == c) {
      ++streak;
    } else {
      candidate = c;
      streak = 1;
    }
    if (streak >= n) {
      out.push_back({static_cast<std::int64_t>(f), *confirmed, c});
      confirmed = c;
      candidate.reset();
      streak = 0;
    }
  }
  return out;
}

}  // namespace oracle
