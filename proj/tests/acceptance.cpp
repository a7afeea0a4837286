// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "adas/documents.hpp"
#include "adas/eval.hpp"
#include "adas/fixtures.hpp"
#include "adas/monitor.hpp"
#include "adas/network.hpp"
#include "adas/pipeline.hpp"
#include "adas/transport.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace adas;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome ok(std::string d) { return {true, std::move(d)}; }
Outcome fail(std::string d) { return {false, std::move(d)}; }

std::string fmt_double(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

const NetworkSpec& net() {
  static const NetworkSpec n = build_backbone17(1, default_anchors());
  return n;
}

const Backbone17Det& random_model() {
  static const Backbone17Det m(net(), make_weights(net(), WeightInit::kRandom, 17));
  return m;
}

Tensor4 random_image(int s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor4 t({1, 3, s, s});
  for (float& v : t.data()) v = static_cast<float>((rng() >> 11) * 0x1.0p-53);
  return t;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adas_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ADAS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Output side per layer at a 608 input, layers 1..17.
const int kExpectedSides[17] = {608, 304, 152, 152, 152, 76, 76, 76, 38, 38, 38, 38, 38, 19, 19, 19, 19};

Outcome c1_layer_table() {
  const auto t0 = Clock::now();
  const auto plan = shape_plan(net(), 608);
  int matched = 0;
  for (int i = 0; i < 17; ++i) {
    const Shape4& s = plan[i].shape;
    if (plan[i].layer == i + 1 && s.h == kExpectedSides[i] && s.w == kExpectedSides[i] &&
        net().layer(i + 1).declared_resolution == kExpectedSides[i])
      ++matched;
  }
  std::map<int, Shape4> seen;
  const Tensor4 out = random_model().forward(random_image(608, 1), {},
                                             [&](const LayerTrace& t) { seen[t.layer] = t.output.shape(); });
  int forward_ok = 0;
  for (const PlannedShape& p : plan) forward_ok += seen.count(p.layer) && seen.at(p.layer) == p.shape;
  const double secs = elapsed_s(t0);
  const std::string d = "plan " + std::to_string(matched) + "/17, forward shapes " + std::to_string(forward_ok) +
                        "/18, output " + out.shape().str() + ", " + fmt_double(secs, 3) + " s";
  const bool pass = matched == 17 && forward_ok == 18 && out.shape() == Shape4{1, 30, 19, 19} && secs < 60.0;
  return {pass, d};
}

Outcome c2_multiscale() {
  std::string bad;
  for (int s = 320; s <= 608; s += 32) {
    const Tensor4 out = random_model().forward(random_image(s, s));
    if (out.shape() != Shape4{1, 30, s / 32, s / 32} || !out.all_finite()) bad += " " + std::to_string(s);
  }
  return bad.empty() ? ok("10/10 sizes give an s/32 grid") : fail("wrong grid at" + bad);
}

Outcome c3_se_half_gate() {
  double worst = 0.0;
  std::mt19937_64 rng(3);
  std::normal_distribution<float> nd(0.0f, 3.0f);
  for (int c : {128, 256, 512, 1024}) {
    Tensor4 x({1, c, 7, 7});
    for (float& v : x.data()) v = nd(rng);
    const Tensor4 y = se_block(x, SeParams::zeros(c, 16));
    for (std::size_t i = 0; i < x.size(); ++i)
      worst = std::max(worst, std::abs(static_cast<double>(y.data()[i]) - 0.5 * x.data()[i]));
  }
  return {worst <= 1e-6, "max |out - 0.5 in| = " + fmt_double(worst)};
}

Outcome c4_residual_zero_conv() {
  NetworkWeights w = bind_weights(net(), make_weights(net(), WeightInit::kRandom, 4));
  const std::map<int, std::vector<int>> levels{{5, {4, 5}}, {8, {7, 8}}, {13, {10, 11, 12, 13}}, {17, {15, 16, 17}}};
  for (const auto& [end, layers] : levels) {
    for (int li : layers) {
      for (ConvParams& c : w.layers[li - 1].convs) {
        std::fill(c.weights.data().begin(), c.weights.data().end(), 0.0f);
        std::fill(c.bn_bias.begin(), c.bn_bias.end(), 0.0f);
        std::fill(c.bn_mean.begin(), c.bn_mean.end(), 0.0f);
      }
    }
  }
  const Backbone17Det model(net(), w);
  std::map<int, Tensor4> outputs, pre_se;
  model.forward(random_image(320, 4), {}, [&](const LayerTrace& t) {
    outputs.insert_or_assign(t.layer, t.output);
    if (t.pre_se) pre_se.insert_or_assign(t.layer, *t.pre_se);
  });
  int exact = 0;
  for (const auto& [end, layers] : levels) {
    const int src = *net().layer(end).residual_from;
    exact += pre_se.count(end) && pre_se.at(end) == outputs.at(src);
  }
  return {exact == 4, std::to_string(exact) + "/4 levels bit-exact"};
}

Outcome c5_iou_oracle() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  bool symmetric = true, self_one = true;
  for (int i = 0; i < 1000; ++i) {
    const oracle::GridBox ga = oracle::random_grid_box(rng, 160), gb = oracle::random_grid_box(rng, 160);
    const Box a = ga.to_box(8), b = gb.to_box(8);
    worst = std::max(worst, std::abs(iou(a, b) - oracle::raster_iou(ga, gb)));
    symmetric = symmetric && iou(a, b) == iou(b, a);
    self_one = self_one && iou(a, a) == 1.0 && iou(b, b) == 1.0;
  }
  return {worst <= 1e-3 && symmetric && self_one,
          "max deviation " + fmt_double(worst) + (symmetric ? ", symmetric" : ", ASYMMETRIC") +
              (self_one ? ", self-IoU 1" : ", self-IoU != 1")};
}

Outcome c6_ap_oracle() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int gt = 1 + static_cast<int>(rng() % 10);
    const int n = static_cast<int>(rng() % 21);
    std::vector<bool> flags;
    int tp = 0;
    for (int i = 0; i < n; ++i) {
      const bool t = tp < gt && rng() % 2 == 0;
      tp += t;
      flags.push_back(t);
    }
    worst = std::max(worst, std::abs(average_precision(flags, gt).ap - oracle::brute_force_ap(flags, gt)));
  }
  const double worked = average_precision({true, false, true}, 2).ap;
  return {worst <= 1e-9 && std::abs(worked - 0.833333) <= 1e-6,
          "max deviation " + fmt_double(worst) + ", worked example " + fmt_double(worked, 9)};
}

const FixtureSet& fixture_set() {
  static const FixtureSet fx = generate_fixtures(work_dir("fixtures"), {});
  return fx;
}

Outcome c7_tp_monotone() {
  const auto gts = fixture_set().gt.labeled_boxes();
  std::mt19937_64 rng(7);
  int checked = 0, held = 0;
  std::string summary;
  for (float spread : {2.0f, 6.0f, 12.0f, 25.0f}) {
    std::uniform_real_distribution<float> jitter(-spread, spread), score(0.0f, 1.0f);
    std::vector<ScoredBox> dets;
    for (const LabeledBox& g : gts) {
      const float dx = jitter(rng), dy = jitter(rng), dw = jitter(rng);
      dets.push_back({g.image, {{g.box.x_min + dx, g.box.y_min + dy, g.box.x_max + dx + std::abs(dw),
                                 g.box.y_max + dy + std::abs(dw)},
                                score(rng), 0}});
    }
    const int tp30 = evaluate(dets, gts, 0.3).true_positive_count;
    const int tp50 = evaluate(dets, gts, 0.5).true_positive_count;
    ++checked;
    held += tp30 >= tp50;
    summary += " " + std::to_string(tp30) + ">=" + std::to_string(tp50);
  }
  return {held == checked, "TP@0.3 >= TP@0.5:" + summary};
}

Outcome c8_light_sweep() {
  int wrong = 0, counts[4] = {0, 0, 0, 0};
  for (int i = 0; i <= 510; ++i) {
    const double agv = i * 0.5;
    const int got = static_cast<int>(classify(agv));
    const int want = agv >= 50 ? 3 : agv >= 20 ? 2 : agv >= 10 ? 1 : 0;
    wrong += got != want;
    if (got >= 0 && got < 4) ++counts[got];
  }
  const bool bounds = classify(50) == LightCondition::kDaytime && classify(20) == LightCondition::kTwilight &&
                      classify(10) == LightCondition::kNightWithStreetLight;
  const LightCondition want[4] = {LightCondition::kDaytime, LightCondition::kTwilight,
                                  LightCondition::kNightWithStreetLight, LightCondition::kNightWithoutStreetLight};
  int fixtures_ok = 0, fixtures_total = 0;
  for (const fs::path& p : fixture_set().images) {
    const std::string name = p.filename().string();
    for (int r = 0; r < 4; ++r) {
      char tag[16];
      std::snprintf(tag, sizeof tag, "_b%03d", kFixtureBrightness[r]);
      if (name.find(tag) == std::string::npos) continue;
      ++fixtures_total;
      fixtures_ok += classify_frame(read_ppm(p)).condition == want[r];
    }
  }
  const bool partition = counts[0] + counts[1] + counts[2] + counts[3] == 511;
  return {wrong == 0 && bounds && partition && fixtures_total == 16 && fixtures_ok == 16,
          std::to_string(511 - wrong) + "/511 sweep points, boundaries " + (bounds ? "ok" : "WRONG") + ", fixtures " +
              std::to_string(fixtures_ok) + "/" + std::to_string(fixtures_total)};
}

Outcome c9_monitor_protocol() {
  using LC = LightCondition;
  std::vector<std::vector<LC>> streams;
  streams.emplace_back(100, LC::kDaytime);
  streams.push_back({LC::kDaytime, LC::kDaytime, LC::kTwilight, LC::kTwilight, LC::kTwilight});
  std::vector<LC> flicker;
  for (int i = 0; i < 40; ++i) flicker.push_back(i % 2 ? LC::kTwilight : LC::kDaytime);
  streams.push_back(flicker);
  std::vector<LC> bdb(10, LC::kDaytime);
  bdb.insert(bdb.end(), 10, LC::kNightWithoutStreetLight);
  bdb.insert(bdb.end(), 10, LC::kDaytime);
  streams.push_back(bdb);
  const std::size_t expected_counts[4] = {0, 1, 0, 2};

  std::string counts;
  bool scripted = true;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    LightMonitor m(3);
    std::vector<oracle::SimWarning> got;
    for (LC c : streams[i]) {
      if (auto w = m.step(c, 0.0)) got.push_back({w->frame_index, w->previous_condition, w->new_condition});
    }
    scripted = scripted && got == oracle::simulate_monitor(streams[i], 3) && got.size() == expected_counts[i];
    counts += (i ? "," : "") + std::to_string(got.size());
  }

  const fs::path dir = work_dir("monitor");
  CloudServerOptions opt;
  opt.drop_first_connections = 1;
  opt.log_path = dir / "server.log";
  std::vector<WarningMessage> emitted;
  std::size_t delivered = 0;
  {
    CloudServer server(opt);
    server.start();
    PipelineConfig cfg;
    cfg.endpoint = Endpoint{"127.0.0.1", server.port()};
    cfg.retry.max_retries = 2;
    cfg.retry.initial_backoff = std::chrono::milliseconds(20);
    const auto frames = generate_sequence(dir / "seq", parse_sequence("200x10,5x10,200x10"), 9);
    std::ostringstream log;
    const MonitorRun run = run_monitor(cfg, nullptr, frames, log);
    emitted = run.warnings;
    delivered = run.delivered;
    server.stop();
  }
  std::vector<WarningMessage> logged;
  std::ifstream in(opt.log_path);
  for (std::string line; std::getline(in, line);) {
    if (auto m = parse_warning(line)) logged.push_back(*m);
  }
  const bool server_ok = emitted.size() == 2 && delivered == 2 && logged == emitted;
  return {scripted && server_ok, "scripted warnings [" + counts + "] " + (scripted ? "match" : "DIFFER") +
                                     " reference; server log " + std::to_string(logged.size()) + "/" +
                                     std::to_string(emitted.size()) + " in order after dropped connection"};
}

Outcome c10_oracle_loop() {
  const fs::path dir = work_dir("loop");
  if (run_cli("gen-fixtures --out " + dir.string() + " --seed 42") != 0) return fail("gen-fixtures failed");
  const std::string gt = (dir / "gt.json").string(), images = (dir / "images").string();
  const auto eval = [&](const std::string& extra, const std::string& tag) -> nlohmann::json {
    const std::string dets = (dir / (tag + ".jsonl")).string(), rep = (dir / (tag + ".json")).string();
    if (run_cli("detect --oracle-gt --gt " + gt + " --input " + images + extra + " --out " + dets) != 0) return {};
    if (run_cli("eval --eval-iou 0.5 --input " + dets + " --gt " + gt + " --out " + rep) != 0) return {};
    return nlohmann::json::parse(slurp(rep))["reports"][0];
  };
  const auto perfect = eval("", "perfect");
  const auto shifted = eval(" --shift 1000", "shifted");
  if (perfect.is_null() || shifted.is_null()) return fail("CLI run failed");
  const double ap = perfect["ap"], pct = perfect["true_positive_percent"], ap_shift = shifted["ap"];
  return {ap == 1.0 && pct == 100.0 && ap_shift == 0.0,
          "AP50 " + fmt_double(ap) + ", TP% " + fmt_double(pct) + ", shifted AP " + fmt_double(ap_shift)};
}

Outcome c11_weight_format() {
  const fs::path dir = work_dir("weights");
  const WeightStore store = make_weights(net(), WeightInit::kRandom, 11);
  save_weights(store, dir / "a.b17w");
  const WeightStore back = load_weights(dir / "a.b17w", net());
  save_weights(back, dir / "b.b17w");
  const bool identical = back == store && slurp(dir / "a.b17w") == slurp(dir / "b.b17w");
  const std::uint64_t counted = count_parameters(net());
  const std::uint64_t oracle = ADAS_ORACLE_PARAM_TOTAL;
  return {identical && counted == oracle && back.element_count() == oracle,
          std::string(identical ? "round trip bit-identical" : "round trip DIFFERS") + ", count " +
              std::to_string(counted) + " vs oracle " + std::to_string(oracle) + " (" ADAS_ORACLE_SOURCE ")"};
}

Outcome c12_determinism() {
  const Tensor4 img = random_image(320, 12);
  const Tensor4 a = random_model().forward(img, {1});
  const bool forward_ok = random_model().forward(img, {1}) == a && random_model().forward(img, {2}) == a;

  const fs::path dir = work_dir("determinism");
  fs::create_directories(dir / "in");
  int copied = 0;
  for (const fs::path& p : fixture_set().images) {
    if (copied == 2) break;
    fs::copy_file(p, dir / "in" / p.filename());
    ++copied;
  }
  const std::string w = (dir / "w.b17w").string();
  if (run_cli("init-weights --seed 12 --out " + w) != 0) return fail("init-weights failed");
  const std::string base = "detect --size 320 --conf 0.05 --weights " + w + " --input " + (dir / "in").string();
  bool cli_ok = run_cli(base + " --workers 1 --out " + (dir / "r1.jsonl").string()) == 0 &&
                run_cli(base + " --workers 1 --out " + (dir / "r2.jsonl").string()) == 0 &&
                run_cli(base + " --workers 2 --out " + (dir / "r3.jsonl").string()) == 0;
  const std::string r1 = slurp(dir / "r1.jsonl");
  cli_ok = cli_ok && !r1.empty() && r1 == slurp(dir / "r2.jsonl") && r1 == slurp(dir / "r3.jsonl");
  return {forward_ok && cli_ok, std::string("forward ") + (forward_ok ? "identical" : "DIFFERS") + ", detect " +
                                    (cli_ok ? "byte-identical" : "DIFFERS") + " across runs and 1/2 workers"};
}

Outcome c13_bench() {
  const BenchReport rep = run_bench(random_model(), {320, 608}, 3);
  if (rep.sizes.size() != 2) return fail("bench returned " + std::to_string(rep.sizes.size()) + " sizes");
  bool layers_ok = true, sum_ok = true;
  for (const SizeTiming& s : rep.sizes) {
    layers_ok = layers_ok && s.layers.size() == 18 && s.layers.back().name == "head";
    for (int i = 0; i < 17 && layers_ok; ++i) {
      char name[16];
      std::snprintf(name, sizeof name, "layer%02d", i + 1);
      layers_ok = s.layers[i].name == name;
    }
    sum_ok = sum_ok && std::abs(s.layer_sum_ms - s.total_median_ms) <= 0.05 * s.total_median_ms;
  }
  const double t320 = rep.sizes[0].total_median_ms, t608 = rep.sizes[1].total_median_ms;
  return {layers_ok && sum_ok && t320 < t608,
          std::string(layers_ok ? "17 layers + head" : "BAD layer list") + ", sums " + (sum_ok ? "within 5%" : "OFF") +
              ", 320: " + fmt_double(t320, 5) + " ms, 608: " + fmt_double(t608, 5) + " ms"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"layer table conformance at 608", c1_layer_table},
      {"multi-scale output grid", c2_multiscale},
      {"SE half-gate with zero parameters", c3_se_half_gate},
      {"residual zero-conv identity", c4_residual_zero_conv},
      {"IoU vs raster oracle", c5_iou_oracle},
      {"AP vs brute-force oracle", c6_ap_oracle},
      {"TP count monotone in IoU threshold", c7_tp_monotone},
      {"light classifier sweep and fixtures", c8_light_sweep},
      {"monitor protocol and server log", c9_monitor_protocol},
      {"end-to-end oracle loop", c10_oracle_loop},
      {"weight format and parameter count", c11_weight_format},
      {"determinism", c12_determinism},
      {"bench sanity", c13_bench},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::printf("%s [%zu] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), elapsed_s(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
