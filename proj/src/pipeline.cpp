#include "adas/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adas/decode.hpp"
#include "adas/errors.hpp"
#include "adas/image.hpp"
#include "json.hpp"

namespace adas {

void PipelineConfig::validate() const {
  validate_input_size(input_size);
  if (!(conf_threshold >= 0.0f && conf_threshold <= 1.0f)) {
    throw ConfigError("conf threshold must be in [0, 1]");
  }
  if (!(nms_threshold > 0.0f && nms_threshold <= 1.0f)) {
    throw ConfigError("NMS IoU threshold must be in (0, 1]");
  }
  if (num_classes < 1) throw ConfigError("classes must be >= 1");
  validate_anchors(anchors);
  thresholds.validate();
  if (debounce_n < 1) throw ConfigError("debounce must be >= 1");
  if (retry.max_retries < 0) throw ConfigError("retries must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    kv[key] = value;
  }
  return kv;
}

void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    try {
      if (key == "size") cfg.input_size = std::stoi(value);
      else if (key == "conf") cfg.conf_threshold = std::stof(value);
      else if (key == "nms_iou") cfg.nms_threshold = std::stof(value);
      else if (key == "classes") cfg.num_classes = std::stoi(value);
      else if (key == "se_reduction") cfg.se_reduction = std::stoi(value);
      else if (key == "anchors") {
        cfg.anchors = value.find(',') != std::string::npos ? parse_anchor_list(value)
                                                            : load_anchors(value);
      } else if (key == "t1") cfg.thresholds.t1 = std::stod(value);
      else if (key == "t2") cfg.thresholds.t2 = std::stod(value);
      else if (key == "t3") cfg.thresholds.t3 = std::stod(value);
      else if (key == "debounce") cfg.debounce_n = std::stoi(value);
      else if (key == "endpoint") {
        if (value.empty()) cfg.endpoint.reset();
        else cfg.endpoint = Endpoint::parse(value);
      } else if (key == "device_id") cfg.device_id = value;
      else if (key == "retries") cfg.retry.max_retries = std::stoi(value);
      else if (key == "timeout_ms") cfg.retry.timeout = std::chrono::milliseconds(std::stoi(value));
      else if (key == "backoff_ms") {
        cfg.retry.initial_backoff = std::chrono::milliseconds(std::stoi(value));
      } else if (key == "weights") {
        if (value.empty()) cfg.weights.reset();
        else cfg.weights = value;
      } else if (key == "weight_init") {
        if (value == "zero") cfg.weight_init = WeightInit::kZero;
        else if (value == "random") cfg.weight_init = WeightInit::kRandom;
        else throw ConfigError("weight_init must be zero or random");
      } else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "workers") cfg.workers = std::stoi(value);
      else throw ConfigError("unknown config key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw ConfigError("config value for \"" + key + "\" is not valid: " + value);
    } catch (const std::out_of_range&) {
      throw ConfigError("config value for \"" + key + "\" is out of range: " + value);
    }
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  PipelineConfig cfg;
  apply_config(cfg, parse_config_text(ss.str(), path.string()));
  return cfg;
}

NetworkSpec network_spec(const PipelineConfig& cfg) {
  return build_backbone17(cfg.num_classes, cfg.anchors, cfg.se_reduction);
}

WeightStore resolve_weights(const PipelineConfig& cfg, const NetworkSpec& net) {
  if (cfg.weights) return load_weights(*cfg.weights, net);
  return make_weights(net, cfg.weight_init, cfg.seed);
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("input directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

NetworkDetector::NetworkDetector(const PipelineConfig& cfg,
                                 std::shared_ptr<const Backbone17Det> net)
    : cfg_(cfg), net_(std::move(net)) {
  cfg_.validate();
}

std::vector<Detection> NetworkDetector::detect(const RgbImage& frame,
                                               const std::string& /*name*/) const {
  const int s = cfg_.input_size;
  const Tensor4 input = to_input_tensor(frame, s);
  const Tensor4 head = net_->forward(input, ExecOptions{cfg_.workers});
  std::vector<Detection> dets = nms(decode(head, net_->spec().anchors, s, cfg_.conf_threshold),
                                    cfg_.nms_threshold);
  const float kx = static_cast<float>(frame.width) / s;
  const float ky = static_cast<float>(frame.height) / s;
  for (Detection& d : dets) {
    d.box.x_min = std::clamp(d.box.x_min * kx, 0.0f, static_cast<float>(frame.width));
    d.box.x_max = std::clamp(d.box.x_max * kx, 0.0f, static_cast<float>(frame.width));
    d.box.y_min = std::clamp(d.box.y_min * ky, 0.0f, static_cast<float>(frame.height));
    d.box.y_max = std::clamp(d.box.y_max * ky, 0.0f, static_cast<float>(frame.height));
  }
  std::erase_if(dets, [](const Detection& d) { return !d.box.valid(); });
  return dets;
}

OracleDetector::OracleDetector(GroundTruthDocument gt, float shift_px)
    : gt_(std::move(gt)), shift_(shift_px) {}

std::vector<Detection> OracleDetector::detect(const RgbImage&, const std::string& name) const {
  std::vector<Detection> out;
  if (const GroundTruthImage* img = gt_.find(name)) {
    for (Detection d : img->labels) {
      d.score = 1.0f;
      d.box.x_min += shift_;
      d.box.x_max += shift_;
      d.box.y_min += shift_;
      d.box.y_max += shift_;
      out.push_back(d);
    }
  }
  std::stable_sort(out.begin(), out.end(), detection_order);
  return out;
}

DetectRun run_detect(const Detector& detector, const std::vector<std::filesystem::path>& images,
                     const GroundTruthDocument* gt,
                     const std::optional<std::filesystem::path>& annotate_dir) {
  DetectRun run;
  if (annotate_dir) std::filesystem::create_directories(*annotate_dir);
  for (const auto& path : images) {
    const std::string name = path.filename().string();
    try {
      RgbImage frame = read_ppm(path);
      ImageDetections rec{name, detector.detect(frame, name)};
      if (annotate_dir) {
        if (const GroundTruthImage* g = gt ? gt->find(name) : nullptr) {
          for (const Detection& l : g->labels) draw_box(frame, l.box, kGroundTruthColor);
        }
        for (const Detection& d : rec.detections) draw_box(frame, d.box, kDetectionColor);
        write_ppm(frame, *annotate_dir / name);
      }
      run.records.push_back(std::move(rec));
      ++run.processed;
    } catch (const std::exception& e) {
      spdlog::error("skipping {}: {}", name, e.what());
      ++run.failed;
    }
  }
  return run;
}

MonitorRun run_monitor(const PipelineConfig& cfg, const Detector* detector,
                       const std::vector<std::filesystem::path>& frames, std::ostream& log,
                       const WallClock& clock) {
  cfg.thresholds.validate();
  MonitorRun run;
  LightMonitor monitor(cfg.debounce_n, cfg.device_id, clock);
  std::unique_ptr<AsyncWarningSender> sender;
  if (cfg.endpoint) sender = std::make_unique<AsyncWarningSender>(*cfg.endpoint, cfg.retry);

  for (const auto& path : frames) {
    MonitorFrame f;
    f.name = path.filename().string();
    RgbImage image;
    try {
      image = read_ppm(path);
    } catch (const std::exception& e) {
      spdlog::error("skipping {}: {}", f.name, e.what());
      continue;
    }
    f.reading = classify_frame(image, cfg.thresholds);
    if (detector) f.detections = detector->detect(image, f.name).size();
    f.warning = monitor.step(f.reading.condition, f.reading.agv);

    log << "frame " << monitor.state().frame_index << " " << f.name << " agv=" << f.reading.agv
        << " condition=" << to_string(f.reading.condition) << " detections=" << f.detections
        << "\n";
    if (f.warning) {
      log << "WARNING " << serialize_warning(*f.warning) << "\n";
      run.warnings.push_back(*f.warning);
      if (sender) sender->submit(*f.warning);
    }
    run.frames.push_back(std::move(f));
  }
  if (sender) {
    sender->flush();
    run.delivered = sender->delivered();
    run.failed = sender->failed();
    run.dropped = sender->dropped();
  }
  return run;
}

BenchReport run_bench(const Backbone17Det& net, const std::vector<int>& sizes, int repeats,
                      const ExecOptions& exec) {
  if (repeats < 1) throw ConfigError("bench repeats must be >= 1");
  using Clock = std::chrono::steady_clock;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };

  BenchReport report;
  report.repeats = repeats;
  report.workers = exec.workers;
  std::mt19937_64 rng(7);
  for (int s : sizes) {
    validate_input_size(s);
    Tensor4 image({1, net.spec().input_channels, s, s});
    for (float& v : image.data()) v = static_cast<float>((rng() >> 11) * 0x1.0p-53);

    std::vector<std::string> names;
    std::vector<std::vector<double>> per_layer;
    std::vector<double> totals;
    for (int r = 0; r < repeats; ++r) {
      std::size_t slot = 0;
      const auto t0 = Clock::now();
      net.forward(image, exec, [&](const LayerTrace& t) {
        if (r == 0) {
          char name[16];
          if (t.layer > 0) std::snprintf(name, sizeof name, "layer%02d", t.layer);
          else std::snprintf(name, sizeof name, "head");
          names.emplace_back(name);
          per_layer.emplace_back();
        }
        per_layer[slot++].push_back(t.elapsed_ms);
      });
      totals.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    SizeTiming st;
    st.input_size = s;
    for (std::size_t i = 0; i < names.size(); ++i) {
      st.layers.push_back({names[i], median(per_layer[i])});
      st.layer_sum_ms += st.layers.back().median_ms;
    }
    st.total_median_ms = median(totals);
    spdlog::info("bench {}x{}: {:.1f} ms (layers sum {:.1f} ms)", s, s, st.total_median_ms,
                 st.layer_sum_ms);
    report.sizes.push_back(std::move(st));
  }
  return report;
}

std::string bench_json(const BenchReport& report) {
  nlohmann::json doc{{"repeats", report.repeats}, {"workers", report.workers}};
  doc["sizes"] = nlohmann::json::array();
  for (const SizeTiming& s : report.sizes) {
    nlohmann::json js{{"input_size", s.input_size},
                      {"total_median_ms", s.total_median_ms},
                      {"layer_sum_ms", s.layer_sum_ms}};
    js["layers"] = nlohmann::json::array();
    for (const LayerTiming& l : s.layers) {
      js["layers"].push_back({{"name", l.name}, {"median_ms", l.median_ms}});
    }
    doc["sizes"].push_back(std::move(js));
  }
  return doc.dump(2);
}

}  // namespace adas
