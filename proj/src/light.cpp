#include "adas/light.hpp"

#include <cmath>
#include <string>

#include "adas/errors.hpp"

namespace adas {

std::string_view to_string(LightCondition c) {
  switch (c) {
    case LightCondition::kDaytime: return "daytime";
    case LightCondition::kTwilight: return "twilight";
    case LightCondition::kNightWithStreetLight: return "night_street_light";
    case LightCondition::kNightWithoutStreetLight: return "night_no_light";
  }
  return "unknown";
}

std::optional<LightCondition> parse_light_condition(std::string_view s) {
  for (auto c : {LightCondition::kDaytime, LightCondition::kTwilight,
                 LightCondition::kNightWithStreetLight,
                 LightCondition::kNightWithoutStreetLight}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

void Thresholds::validate() const {
  if (!(0.0 < t3 && t3 < t2 && t2 < t1 && t1 < 255.0)) {
    throw ConfigError("light thresholds must satisfy 0 < t3 < t2 < t1 < 255 (got t1=" +
                      std::to_string(t1) + " t2=" + std::to_string(t2) +
                      " t3=" + std::to_string(t3) + ")");
  }
}

std::vector<double> to_grayscale(const RgbImage& frame, const GrayWeights& weights) {
  if (frame.empty()) throw InputError("cannot convert an empty frame to grayscale");
  if (weights.r < 0 || weights.g < 0 || weights.b < 0 ||
      weights.r + weights.g + weights.b != 1000) {
    throw ConfigError("gray weights must be non-negative thousandths summing to 1000");
  }
  std::vector<double> gray(static_cast<std::size_t>(frame.width) * frame.height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const std::uint8_t* p = frame.pixels.data() + i * 3;
    const int sum = weights.r * p[0] + weights.g * p[1] + weights.b * p[2];
    gray[i] = sum / 1000.0;
  }
  return gray;
}

double average_gray(const std::vector<double>& gray) {
  if (gray.empty()) throw InputError("average gray of an empty frame");
  double sum = 0.0;
  for (double v : gray) sum += v;
  return sum / static_cast<double>(gray.size());
}

LightCondition classify(double agv, const Thresholds& thr) {
  thr.validate();
  if (agv >= thr.t1) return LightCondition::kDaytime;
  if (agv >= thr.t2) return LightCondition::kTwilight;
  if (agv >= thr.t3) return LightCondition::kNightWithStreetLight;
  return LightCondition::kNightWithoutStreetLight;
}

LightReading classify_frame(const RgbImage& frame, const Thresholds& thr,
                            const GrayWeights& weights) {
  LightReading r;
  r.agv = average_gray(to_grayscale(frame, weights));
  r.condition = classify(r.agv, thr);
  return r;
}

}  // namespace adas
