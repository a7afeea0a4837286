#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "adas/image.hpp"

namespace adas {

/// Ordered darkest to brightest, so the underlying value is monotone in AGV.
enum class LightCondition : int {
  kNightWithoutStreetLight = 0,
  kNightWithStreetLight = 1,
  kTwilight = 2,
  kDaytime = 3,
};

/// Wire names: "daytime", "twilight", "night_street_light", "night_no_light".
std::string_view to_string(LightCondition c);
std::optional<LightCondition> parse_light_condition(std::string_view s);

/// Gray-level cut points; valid when 0 < t3 < t2 < t1 < 255.
struct Thresholds {
  double t1 = 50.0;
  double t2 = 20.0;
  double t3 = 10.0;

  void validate() const;
};

/// Luma weights in thousandths (BT.601 by default). Integer weights keep a
/// uniform gray pixel v mapping to exactly v.
struct GrayWeights {
  int r = 299;
  int g = 587;
  int b = 114;
};

/// Real-valued per-pixel luma, row-major.
std::vector<double> to_grayscale(const RgbImage& frame, const GrayWeights& weights = {});

/// Mean of the gray values. Throws InputError on an empty frame.
double average_gray(const std::vector<double>& gray);

/// agv >= t1 -> daytime; [t2, t1) -> twilight; [t3, t2) -> night with
/// street light; below t3 -> night without street light.
LightCondition classify(double agv, const Thresholds& thr = {});

struct LightReading {
  double agv = 0.0;
  LightCondition condition = LightCondition::kDaytime;
};

LightReading classify_frame(const RgbImage& frame, const Thresholds& thr = {},
                            const GrayWeights& weights = {});

}  // namespace adas
