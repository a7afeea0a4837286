// adas: detection, light-condition monitoring and evaluation tool.
//
//   adas gen-fixtures --out fx --seed 42
//   adas detect --input fx/images --gt fx/gt.json --out dets.ndjson --size 320
//   adas eval --input dets.ndjson --gt fx/gt.json --eval-iou 0.3,0.5
//   adas cloud-serve --port 9500 --out warnings.log
//   adas monitor --input seq --endpoint 127.0.0.1:9500
//   adas bench --sizes 320,608 --repeats 3
//
// Exit codes: 0 ok, 1 run failed, 2 config error, 3 I/O error, 4 eval error.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "adas/errors.hpp"
#include "adas/eval.hpp"
#include "adas/fixtures.hpp"
#include "adas/pipeline.hpp"
#include "adas/transport.hpp"
#include "adas/weights.hpp"

namespace {

using namespace adas;

// Flags shared by the pipeline subcommands; unset ones fall back to the
// config file, then to built-in defaults.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> weights;
  std::optional<std::string> weight_init;
  std::optional<std::string> anchors;
  std::optional<int> size;
  std::optional<float> conf;
  std::optional<float> nms_iou;
  std::optional<double> t1, t2, t3;
  std::optional<int> debounce;
  std::optional<std::string> endpoint;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> retries;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "flat key = value config file");
    app->add_option("--weights", weights, "B17W weight file");
    app->add_option("--weight-init", weight_init, "zero|random when no weight file is given");
    app->add_option("--anchors", anchors, "anchor file (w h per line) or inline \"w,h w,h\"");
    app->add_option("--size", size, "square input size, multiple of 32 in [320, 608]");
    app->add_option("--conf", conf, "detection score threshold");
    app->add_option("--nms-iou", nms_iou, "NMS IoU threshold");
    app->add_option("--t1", t1, "gray threshold: daytime at or above");
    app->add_option("--t2", t2, "gray threshold: twilight at or above");
    app->add_option("--t3", t3, "gray threshold: night with street light at or above");
    app->add_option("--debounce", debounce, "frames a new condition must persist");
    app->add_option("--endpoint", endpoint, "cloud endpoint host:port");
    app->add_option("--seed", seed, "seed for generated weights and fixtures");
    app->add_option("--workers", workers, "worker threads per convolution");
    app->add_option("--retries", retries, "warning delivery retries");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (config) cfg = load_config(*config);
    std::map<std::string, std::string> kv;
    auto set = [&kv](const char* key, const auto& opt) {
      if (opt) {
        std::ostringstream os;
        os.precision(17);
        os << *opt;
        kv[key] = os.str();
      }
    };
    set("weights", weights);
    set("weight_init", weight_init);
    set("anchors", anchors);
    set("size", size);
    set("conf", conf);
    set("nms_iou", nms_iou);
    set("t1", t1);
    set("t2", t2);
    set("t3", t3);
    set("debounce", debounce);
    set("endpoint", endpoint);
    set("seed", seed);
    set("workers", workers);
    set("retries", retries);
    apply_config(cfg, kv);
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_or_print(const std::string& text, const std::optional<std::string>& path) {
  if (!path || *path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + *path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + *path);
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

int cmd_detect(const CommonFlags& flags, const std::string& input,
               const std::optional<std::string>& gt_path, const std::optional<std::string>& out,
               const std::optional<std::string>& annotate, bool oracle, float shift) {
  const PipelineConfig cfg = flags.resolve();
  const auto images = list_images(input);
  std::optional<GroundTruthDocument> gt;
  if (gt_path) gt = load_ground_truth(*gt_path);

  std::unique_ptr<Detector> detector;
  if (oracle) {
    if (!gt) throw ConfigError("--oracle-gt needs --gt");
    detector = std::make_unique<OracleDetector>(*gt, shift);
  } else if (!images.empty()) {
    const NetworkSpec net = network_spec(cfg);
    auto model = std::make_shared<const Backbone17Det>(net, resolve_weights(cfg, net));
    detector = std::make_unique<NetworkDetector>(cfg, std::move(model));
  }
  if (images.empty()) {
    spdlog::warn("no .ppm images in {}", input);
    write_or_print("", out);
    return kExitOk;
  }
  std::optional<std::filesystem::path> annotate_dir;
  if (annotate) annotate_dir = *annotate;
  const DetectRun run = run_detect(*detector, images, gt ? &*gt : nullptr, annotate_dir);
  write_or_print(serialize_detections(run.records), out);
  std::size_t total = 0;
  for (const auto& r : run.records) total += r.detections.size();
  spdlog::info("{} image(s) processed, {} failed, {} detection(s)", run.processed, run.failed,
               total);
  return run.processed == 0 ? kExitFailure : kExitOk;
}

int cmd_eval(const std::string& dets, const std::string& gt, const std::string& ious,
             bool eleven_point, const std::optional<std::string>& out) {
  const ApMode mode = eleven_point ? ApMode::kElevenPoint : ApMode::kAllPoint;
  std::vector<EvalReport> reports;
  for (const std::string& s : split_list(ious)) {
    double thr = 0.0;
    try {
      thr = std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError("--eval-iou entry \"" + s + "\" is not a number");
    }
    if (!(thr > 0.0 && thr <= 1.0)) throw ConfigError("--eval-iou must be in (0, 1]");
    reports.push_back(evaluate_files(dets, gt, thr, mode));
  }
  if (reports.empty()) throw ConfigError("--eval-iou is empty");
  std::cout << render_table(reports);
  if (out) write_or_print(render_json(reports) + "\n", out);
  return kExitOk;
}

int cmd_monitor(const CommonFlags& flags, const std::string& input, bool detect,
                const std::optional<std::string>& out) {
  const PipelineConfig cfg = flags.resolve();
  const auto frames = list_images(input);
  std::unique_ptr<Detector> detector;
  if (detect && !frames.empty()) {
    const NetworkSpec net = network_spec(cfg);
    auto model = std::make_shared<const Backbone17Det>(net, resolve_weights(cfg, net));
    detector = std::make_unique<NetworkDetector>(cfg, std::move(model));
  }
  if (!cfg.endpoint) spdlog::info("no endpoint configured; warnings are logged locally only");
  const MonitorRun run = run_monitor(cfg, detector.get(), frames, std::cout);
  if (out) {
    std::string lines;
    for (const WarningMessage& w : run.warnings) lines += serialize_warning(w) + "\n";
    write_or_print(lines, out);
  }
  spdlog::info("{} frame(s), {} warning(s); delivered {}, failed {}, dropped {}",
               run.frames.size(), run.warnings.size(), run.delivered, run.failed, run.dropped);
  return kExitOk;
}

int cmd_cloud_serve(int port, const std::optional<std::string>& log_path, int drop_first,
                    int max_records, double duration_s) {
  CloudServerOptions opt;
  opt.bind_address = "127.0.0.1";
  opt.port = port;
  if (log_path) opt.log_path = *log_path;
  opt.drop_first_connections = drop_first;
  CloudServer server(opt);
  server.start();
  // the bound port goes to stdout so scripts can use --port 0
  std::cout << "listening " << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    if (max_records > 0 && server.record_count() >= static_cast<std::size_t>(max_records)) break;
    if (duration_s > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >=
            duration_s) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  server.stop();
  spdlog::info("cloud server stopped after {} record(s)", server.record_count());
  return kExitOk;
}

int cmd_gen_fixtures(const std::string& out, std::uint64_t seed, int frames,
                     const std::optional<std::string>& sequence) {
  if (sequence) {
    const auto paths = generate_sequence(out, parse_sequence(*sequence), seed);
    spdlog::info("wrote {} sequence frame(s) to {}", paths.size(), out);
    return kExitOk;
  }
  FixtureOptions opt;
  opt.seed = seed;
  opt.frames_per_regime = frames;
  const FixtureSet set = generate_fixtures(out, opt);
  spdlog::info("wrote {} image(s), {} and {}", set.images.size(), set.ground_truth.string(),
               set.anchors.string());
  return kExitOk;
}

int cmd_bench(const CommonFlags& flags, const std::string& sizes, int repeats,
              const std::optional<std::string>& out) {
  const PipelineConfig cfg = flags.resolve();
  std::vector<int> list;
  for (const std::string& s : split_list(sizes)) {
    try {
      list.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("--sizes entry \"" + s + "\" is not an integer");
    }
    validate_input_size(list.back());
  }
  const NetworkSpec net = network_spec(cfg);
  const Backbone17Det model(net, resolve_weights(cfg, net));
  const BenchReport report = run_bench(model, list, repeats, ExecOptions{cfg.workers});
  write_or_print(bench_json(report) + "\n", out);
  return kExitOk;
}

int cmd_init_weights(const CommonFlags& flags, const std::string& out) {
  PipelineConfig cfg = flags.resolve();
  cfg.weights.reset();
  const NetworkSpec net = network_spec(cfg);
  const WeightStore store = resolve_weights(cfg, net);
  save_weights(store, out);
  spdlog::info("wrote {} parameters in {} blobs to {}", store.element_count(),
               store.blobs.size(), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("adas"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"Backbone17-Det detector, light-condition monitor and AP evaluator"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonFlags common;

  auto* detect = app.add_subcommand("detect", "run the detector over a directory of .ppm frames");
  std::string detect_input;
  std::optional<std::string> detect_gt, detect_out, detect_annotate;
  bool detect_oracle = false;
  float detect_shift = 0.0f;
  common.add_to(detect);
  detect->add_option("--input", detect_input, "image directory")->required();
  detect->add_option("--gt", detect_gt, "ground-truth document (annotation, oracle mode)");
  detect->add_option("--out", detect_out, "detections file (NDJSON); stdout if omitted");
  detect->add_option("--annotate", detect_annotate, "write annotated frames here");
  detect->add_flag("--oracle-gt", detect_oracle, "replay ground truth as detections");
  detect->add_option("--shift", detect_shift, "pixel offset applied to oracle boxes");

  auto* eval = app.add_subcommand("eval", "average precision of a detections file");
  std::string eval_input, eval_gt, eval_ious = "0.5";
  std::optional<std::string> eval_out;
  bool eleven = false;
  eval->add_option("--input", eval_input, "detections file (NDJSON)")->required();
  eval->add_option("--gt", eval_gt, "ground-truth document")->required();
  eval->add_option("--eval-iou", eval_ious, "comma-separated IoU thresholds");
  eval->add_flag("--eleven-point", eleven, "11-point interpolated AP instead of all-point");
  eval->add_option("--out", eval_out, "machine-readable report (JSON)");

  auto* monitor = app.add_subcommand("monitor", "classify light per frame and warn on changes");
  std::string monitor_input;
  std::optional<std::string> monitor_out;
  bool monitor_no_detect = false;
  common.add_to(monitor);
  monitor->add_option("--input", monitor_input, "frame directory (filename order)")->required();
  monitor->add_flag("--no-detect", monitor_no_detect, "skip the detector, classify only");
  monitor->add_option("--out", monitor_out, "local copy of emitted warnings");

  auto* serve = app.add_subcommand("cloud-serve", "mock cloud endpoint that logs warnings");
  int serve_port = 9500, serve_drop = 0, serve_max = 0;
  double serve_duration = 0.0;
  std::optional<std::string> serve_out;
  serve->add_option("--port", serve_port, "TCP port (0 picks one)");
  serve->add_option("--out", serve_out, "append-only warning log");
  serve->add_option("--drop-first", serve_drop, "close the first N connections unanswered");
  serve->add_option("--max-records", serve_max, "exit after this many records");
  serve->add_option("--duration", serve_duration, "exit after this many seconds");

  auto* gen = app.add_subcommand("gen-fixtures", "write synthetic frames, ground truth, anchors");
  std::string gen_out;
  std::uint64_t gen_seed = 42;
  int gen_frames = 4;
  std::optional<std::string> gen_sequence;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--frames", gen_frames, "frames per brightness regime");
  gen->add_option("--sequence", gen_sequence, "monitor sequence instead, e.g. 200x10,5x10");

  auto* bench = app.add_subcommand("bench", "per-layer forward timing");
  std::string bench_sizes = "320,352,384,416,448,480,512,544,576,608";
  int bench_repeats = 3;
  std::optional<std::string> bench_out;
  common.add_to(bench);
  bench->add_option("--sizes", bench_sizes, "comma-separated input sizes");
  bench->add_option("--repeats", bench_repeats, "runs per size (median reported)");
  bench->add_option("--out", bench_out, "JSON report; stdout if omitted");

  auto* init = app.add_subcommand("init-weights", "write generated weights as a B17W file");
  std::string init_out;
  common.add_to(init);
  init->add_option("--out", init_out, "weight file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*detect) {
      return cmd_detect(common, detect_input, detect_gt, detect_out, detect_annotate,
                        detect_oracle, detect_shift);
    }
    if (*eval) return cmd_eval(eval_input, eval_gt, eval_ious, eleven, eval_out);
    if (*monitor) return cmd_monitor(common, monitor_input, !monitor_no_detect, monitor_out);
    if (*serve) return cmd_cloud_serve(serve_port, serve_out, serve_drop, serve_max, serve_duration);
    if (*gen) return cmd_gen_fixtures(gen_out, gen_seed, gen_frames, gen_sequence);
    if (*bench) return cmd_bench(common, bench_sizes, bench_repeats, bench_out);
    if (*init) return cmd_init_weights(common, init_out);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const InputError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const WeightFormatError& e) {
    spdlog::error("weight file error: {}", e.what());
    return kExitIo;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kExitIo;
  } catch (const SchemaError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kExitIo;
  } catch (const EvalError& e) {
    spdlog::error("evaluation error: {}", e.what());
    return kExitEval;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("I/O error: {}", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
