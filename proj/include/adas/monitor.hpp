#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "adas/light.hpp"

namespace adas {

struct WarningMessage {
  std::string device_id;
  std::int64_t frame_index = 0;
  std::string wall_time;  // ISO-8601 UTC, e.g. 2026-10-14T08:30:00.125Z
  LightCondition previous_condition = LightCondition::kDaytime;
  LightCondition new_condition = LightCondition::kDaytime;
  double agv = 0.0;

  friend bool operator==(const WarningMessage&, const WarningMessage&) = default;
};

/// One flat JSON object, no trailing newline.
std::string serialize_warning(const WarningMessage& msg);
/// Returns nullopt for anything that is not a well-formed warning line.
std::optional<WarningMessage> parse_warning(const std::string& line);

std::string iso8601_utc(std::chrono::system_clock::time_point t);

struct MonitorState {
  std::optional<LightCondition> confirmed;
  std::optional<LightCondition> candidate;
  int candidate_streak = 0;
  int debounce_n = 3;
  std::string device_id = "adas-0";
  std::int64_t frame_index = -1;  // index of the last frame stepped
};

using WallClock = std::function<std::chrono::system_clock::time_point()>;

/// Debounced change detector over an ordered frame stream. The first frame
/// only sets the confirmed condition; a different condition must persist
/// for debounce_n consecutive frames before a warning is produced.
class LightMonitor {
 public:
  explicit LightMonitor(int debounce_n = 3, std::string device_id = "adas-0",
                        WallClock clock = {});

  std::optional<WarningMessage> step(LightCondition frame_condition, double agv);

  const MonitorState& state() const { return state_; }

 private:
  MonitorState state_;
  WallClock clock_;
};

/// Free-function form over an explicit state.
std::optional<WarningMessage> step(MonitorState& state, LightCondition frame_condition,
                                   double agv, const WallClock& clock = {});

}  // namespace adas
