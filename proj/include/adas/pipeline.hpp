#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adas/anchors.hpp"
#include "adas/documents.hpp"
#include "adas/light.hpp"
#include "adas/monitor.hpp"
#include "adas/network.hpp"
#include "adas/transport.hpp"

namespace adas {

/// Process exit codes of the `adas` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // e.g. every image in a detect run failed
  kExitConfig = 2,
  kExitIo = 3,
  kExitEval = 4,
};

struct PipelineConfig {
  int input_size = 608;
  float conf_threshold = 0.25f;
  float nms_threshold = 0.45f;
  int num_classes = 1;
  int se_reduction = 16;
  AnchorSet anchors = default_anchors();
  Thresholds thresholds;
  int debounce_n = 3;
  std::optional<Endpoint> endpoint;
  std::string device_id = "adas-0";
  RetryPolicy retry;
  std::optional<std::filesystem::path> weights;  // absent: generated weights
  WeightInit weight_init = WeightInit::kRandom;
  std::uint64_t seed = 42;
  int workers = 1;

  void validate() const;
};

/// Flat "key = value" document; '#' comments. Unknown keys are errors.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin);
void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv);
PipelineConfig load_config(const std::filesystem::path& path);

NetworkSpec network_spec(const PipelineConfig& cfg);
/// Loads cfg.weights, or generates zero/random weights from cfg.seed.
WeightStore resolve_weights(const PipelineConfig& cfg, const NetworkSpec& net);

/// Ppm files of a directory in filename order.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

class Detector {
 public:
  virtual ~Detector() = default;
  /// Boxes in the frame's own pixel coordinates, NMS already applied.
  virtual std::vector<Detection> detect(const RgbImage& frame, const std::string& name) const = 0;
};

class NetworkDetector : public Detector {
 public:
  NetworkDetector(const PipelineConfig& cfg, std::shared_ptr<const Backbone17Det> net);
  std::vector<Detection> detect(const RgbImage& frame, const std::string& name) const override;

 private:
  PipelineConfig cfg_;
  std::shared_ptr<const Backbone17Det> net_;
};

/// Replays ground truth as score-1.0 detections; the reference end of the
/// evaluation loop.
class OracleDetector : public Detector {
 public:
  explicit OracleDetector(GroundTruthDocument gt, float shift_px = 0.0f);
  std::vector<Detection> detect(const RgbImage& frame, const std::string& name) const override;

 private:
  GroundTruthDocument gt_;
  float shift_;
};

struct DetectRun {
  std::vector<ImageDetections> records;
  int processed = 0;
  int failed = 0;
};

/// Per-image failures are logged and skipped. When annotate_dir is set, an
/// annotated copy of each frame is written: ground truth in red (if known),
/// detections in green.
DetectRun run_detect(const Detector& detector, const std::vector<std::filesystem::path>& images,
                     const GroundTruthDocument* gt = nullptr,
                     const std::optional<std::filesystem::path>& annotate_dir = std::nullopt);

struct MonitorFrame {
  std::string name;
  LightReading reading;
  std::size_t detections = 0;
  std::optional<WarningMessage> warning;
};

struct MonitorRun {
  std::vector<MonitorFrame> frames;
  std::vector<WarningMessage> warnings;
  std::size_t delivered = 0;
  std::size_t failed = 0;
  std::size_t dropped = 0;
};

/// Frames in the given order: classify, optionally detect, step the
/// monitor, hand warnings to the async sender when an endpoint is set.
MonitorRun run_monitor(const PipelineConfig& cfg, const Detector* detector,
                       const std::vector<std::filesystem::path>& frames, std::ostream& log,
                       const WallClock& clock = {});

struct LayerTiming {
  std::string name;
  double median_ms = 0.0;
};

struct SizeTiming {
  int input_size = 0;
  std::vector<LayerTiming> layers;  // layer01..layer17, head
  double total_median_ms = 0.0;
  double layer_sum_ms = 0.0;
};

struct BenchReport {
  int repeats = 0;
  int workers = 1;
  std::vector<SizeTiming> sizes;
};

BenchReport run_bench(const Backbone17Det& net, const std::vector<int>& sizes, int repeats,
                      const ExecOptions& exec = {});
std::string bench_json(const BenchReport& report);

}  // namespace adas
