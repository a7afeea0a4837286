#include "adas/monitor.hpp"

#include <cmath>
#include <ctime>

#include "adas/errors.hpp"
#include "json.hpp"

namespace adas {

using nlohmann::json;

std::string serialize_warning(const WarningMessage& msg) {
  json j{{"device_id", msg.device_id},
         {"frame_index", msg.frame_index},
         {"wall_time", msg.wall_time},
         {"previous_condition", to_string(msg.previous_condition)},
         {"new_condition", to_string(msg.new_condition)},
         {"agv", msg.agv}};
  return j.dump();
}

std::optional<WarningMessage> parse_warning(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto str = [&j](const char* k) { return j.contains(k) && j[k].is_string(); };
  if (!str("device_id") || !str("wall_time") || !str("previous_condition") ||
      !str("new_condition") || !j.contains("frame_index") ||
      !j["frame_index"].is_number_integer() || !j.contains("agv") ||
      !j["agv"].is_number()) {
    return std::nullopt;
  }
  auto prev = parse_light_condition(j["previous_condition"].get<std::string>());
  auto next = parse_light_condition(j["new_condition"].get<std::string>());
  if (!prev || !next || *prev == *next) return std::nullopt;
  WarningMessage m;
  m.device_id = j["device_id"].get<std::string>();
  m.frame_index = j["frame_index"].get<std::int64_t>();
  m.wall_time = j["wall_time"].get<std::string>();
  m.previous_condition = *prev;
  m.new_condition = *next;
  m.agv = j["agv"].get<double>();
  if (!std::isfinite(m.agv) || m.agv < 0.0 || m.agv > 255.0) return std::nullopt;
  return m;
}

std::string iso8601_utc(std::chrono::system_clock::time_point t) {
  using namespace std::chrono;
  const auto ms = duration_cast<milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms % 1000));
  return buf;
}

std::optional<WarningMessage> step(MonitorState& s, LightCondition cond, double agv,
                                   const WallClock& clock) {
  ++s.frame_index;
  if (!s.confirmed) {
    s.confirmed = cond;
    return std::nullopt;
  }
  if (cond == *s.confirmed) {
    s.candidate.reset();
    s.candidate_streak = 0;
    return std::nullopt;
  }
  if (s.candidate == cond) {
    ++s.candidate_streak;
  } else {
    s.candidate = cond;
    s.candidate_streak = 1;
  }
  if (s.candidate_streak < s.debounce_n) return std::nullopt;

  WarningMessage msg;
  msg.device_id = s.device_id;
  msg.frame_index = s.frame_index;
  msg.wall_time = iso8601_utc(clock ? clock() : std::chrono::system_clock::now());
  msg.previous_condition = *s.confirmed;
  msg.new_condition = cond;
  msg.agv = agv;
  s.confirmed = cond;
  s.candidate.reset();
  s.candidate_streak = 0;
  return msg;
}

LightMonitor::LightMonitor(int debounce_n, std::string device_id, WallClock clock)
    : clock_(std::move(clock)) {
  if (debounce_n < 1) throw ConfigError("debounce must be >= 1 frame");
  state_.debounce_n = debounce_n;
  state_.device_id = std::move(device_id);
}

std::optional<WarningMessage> LightMonitor::step(LightCondition frame_condition,
                                                 double agv) {
  return adas::step(state_, frame_condition, agv, clock_);
}

}  // namespace adas
