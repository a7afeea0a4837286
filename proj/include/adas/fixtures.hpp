#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "adas/anchors.hpp"
#include "adas/documents.hpp"
#include "adas/image.hpp"

namespace adas {

/// Background gray levels of the four synthetic light regimes, brightest
/// first: one per light condition under the default thresholds.
inline constexpr int kFixtureBrightness[4] = {200, 35, 15, 5};

struct Scene {
  RgbImage image;
  std::vector<Box> people;
};

/// Uniform background at `brightness` with 1-3 upright "person" rectangles.
/// Each target is split into a lighter upper half and a darker lower half
/// of equal area, offset symmetrically around the background, so the
/// frame's average gray equals `brightness` exactly.
Scene make_scene(int brightness, int width, int height, std::mt19937_64& rng);

/// k-means over (w, h) with 1 - IoU as distance, deterministic for a seed.
/// Returns k priors sorted by area.
AnchorSet kmeans_anchors(const std::vector<std::pair<float, float>>& dims, int k,
                         std::uint64_t seed);

struct FixtureOptions {
  std::uint64_t seed = 42;
  int frames_per_regime = 4;
  int width = 320;
  int height = 240;
};

struct FixtureSet {
  std::vector<std::filesystem::path> images;
  std::filesystem::path ground_truth;
  std::filesystem::path anchors;
  GroundTruthDocument gt;
};

/// Writes images/NNNN_b<brightness>.ppm, gt.json and anchors.txt under out.
FixtureSet generate_fixtures(const std::filesystem::path& out, const FixtureOptions& opt);

/// Ordered monitor sequence: runs of (brightness, frame count), written as
/// seq_NNNN.ppm so filename order is stream order.
struct SequenceRun {
  int brightness = 200;
  int frames = 1;
};
std::vector<SequenceRun> parse_sequence(const std::string& text);  // "200x10,5x10"
std::vector<std::filesystem::path> generate_sequence(const std::filesystem::path& out,
                                                     const std::vector<SequenceRun>& runs,
                                                     std::uint64_t seed, int width = 320,
                                                     int height = 240);

}  // namespace adas
