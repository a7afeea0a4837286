#include "adas/fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "adas/errors.hpp"

namespace adas {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

double box_iou_wh(float w1, float h1, float w2, float h2) {
  const double inter = std::min(w1, w2) * static_cast<double>(std::min(h1, h2));
  return inter / (static_cast<double>(w1) * h1 + static_cast<double>(w2) * h2 - inter);
}

}  // namespace

Scene make_scene(int brightness, int width, int height, std::mt19937_64& rng) {
  if (brightness < 0 || brightness > 255) throw InputError("brightness outside [0, 255]");
  Scene scene;
  const auto bg = static_cast<std::uint8_t>(brightness);
  scene.image = RgbImage(width, height, bg, bg, bg);

  const int delta = std::min({brightness, 255 - brightness, 80});
  const int targets = uniform_int(rng, 1, 3);
  for (int t = 0, tries = 0; t < targets && tries < 200; ++tries) {
    const int h = 2 * uniform_int(rng, std::max(4, height / 12), std::max(5, height / 4));
    const int w = std::max(2, static_cast<int>(h * (0.3 + 0.1 * uniform_int(rng, 0, 3))));
    if (w >= width || h >= height) continue;
    const int x = uniform_int(rng, 0, width - w);
    const int y = uniform_int(rng, 0, height - h);
    const Box box{static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + w),
                  static_cast<float>(y + h)};
    const bool overlaps = std::any_of(scene.people.begin(), scene.people.end(), [&](const Box& o) {
      return box.x_min < o.x_max + 2 && o.x_min < box.x_max + 2 && box.y_min < o.y_max + 2 &&
             o.y_min < box.y_max + 2;
    });
    if (overlaps) continue;
    const auto hi = static_cast<std::uint8_t>(brightness + delta);
    const auto lo = static_cast<std::uint8_t>(brightness - delta);
    scene.image.fill_rect(x, y, x + w, y + h / 2, hi, hi, hi);
    scene.image.fill_rect(x, y + h / 2, x + w, y + h, lo, lo, lo);
    scene.people.push_back(box);
    ++t;
  }
  return scene;
}

AnchorSet kmeans_anchors(const std::vector<std::pair<float, float>>& dims, int k,
                         std::uint64_t seed) {
  if (k < 1) throw ConfigError("k-means needs k >= 1");
  if (dims.empty()) throw InputError("k-means over an empty box set");
  std::mt19937_64 rng(seed);

  // init: k distinct points chosen by a seeded shuffle of indices
  std::vector<std::size_t> order(dims.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  std::vector<std::pair<float, float>> centers;
  for (int i = 0; i < k; ++i) centers.push_back(dims[order[i % order.size()]]);

  std::vector<int> assign(dims.size(), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      int best = 0;
      double best_d = 2.0;
      for (int c = 0; c < k; ++c) {
        const double d = 1.0 - box_iou_wh(dims[i].first, dims[i].second, centers[c].first,
                                          centers[c].second);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    for (int c = 0; c < k; ++c) {
      double sw = 0.0, sh = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        if (assign[i] != c) continue;
        sw += dims[i].first;
        sh += dims[i].second;
        ++n;
      }
      if (n > 0) centers[c] = {static_cast<float>(sw / n), static_cast<float>(sh / n)};
    }
    if (!changed) break;
  }

  AnchorSet anchors;
  for (const auto& [w, h] : centers) anchors.push_back({w, h});
  std::sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) {
    return a.w * a.h < b.w * b.h || (a.w * a.h == b.w * b.h && a.w < b.w);
  });
  return anchors;
}

FixtureSet generate_fixtures(const std::filesystem::path& out, const FixtureOptions& opt) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out / "images", ec);
  if (ec) throw IoError("cannot create " + (out / "images").string() + ": " + ec.message());

  std::mt19937_64 rng(opt.seed);
  FixtureSet set;
  std::vector<std::pair<float, float>> dims;
  int index = 0;
  for (int regime : kFixtureBrightness) {
    for (int f = 0; f < opt.frames_per_regime; ++f) {
      Scene scene = make_scene(regime, opt.width, opt.height, rng);
      char name[64];
      std::snprintf(name, sizeof name, "%04d_b%03d.ppm", index++, regime);
      const fs::path path = out / "images" / name;
      write_ppm(scene.image, path);
      set.images.push_back(path);

      GroundTruthImage gi;
      gi.name = name;
      gi.width = opt.width;
      gi.height = opt.height;
      for (const Box& b : scene.people) {
        gi.labels.push_back({b, 1.0f, 0});
        dims.emplace_back(b.width() * kReferenceInput / opt.width,
                          b.height() * kReferenceInput / opt.height);
      }
      set.gt.images.push_back(std::move(gi));
    }
  }
  set.ground_truth = out / "gt.json";
  save_ground_truth(set.gt, set.ground_truth);
  set.anchors = out / "anchors.txt";
  save_anchors(kmeans_anchors(dims, 5, opt.seed), set.anchors);
  return set;
}

std::vector<SequenceRun> parse_sequence(const std::string& text) {
  std::vector<SequenceRun> runs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(item);
      SequenceRun r{std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1))};
      if (r.brightness < 0 || r.brightness > 255 || r.frames < 1) {
        throw std::invalid_argument(item);
      }
      runs.push_back(r);
    } catch (const std::exception&) {
      throw ConfigError("sequence item \"" + item + "\" is not <brightness>x<frames>");
    }
  }
  if (runs.empty()) throw ConfigError("empty sequence");
  return runs;
}

std::vector<std::filesystem::path> generate_sequence(const std::filesystem::path& out,
                                                     const std::vector<SequenceRun>& runs,
                                                     std::uint64_t seed, int width, int height) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  std::mt19937_64 rng(seed);
  std::vector<std::filesystem::path> paths;
  int index = 0;
  for (const SequenceRun& r : runs) {
    for (int f = 0; f < r.frames; ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "seq_%04d.ppm", index++);
      const auto path = out / name;
      write_ppm(make_scene(r.brightness, width, height, rng).image, path);
      paths.push_back(path);
    }
  }
  return paths;
}

}  // namespace adas
