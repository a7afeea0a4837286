#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adas/boxes.hpp"
#include "adas/eval.hpp"

namespace adas {

/// Ground-truth document (single JSON object):
///   {"categories": ["person"],
///    "images": [{"name": "f.ppm", "width": W, "height": H,
///                "labels": [{"category": "person",
///                            "box2d": {"x1":..,"y1":..,"x2":..,"y2":..}}]}]}
struct GroundTruthImage {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<Detection> labels;  // score unused (1.0)
};

struct GroundTruthDocument {
  std::vector<std::string> categories{"person"};
  std::vector<GroundTruthImage> images;

  std::vector<LabeledBox> labeled_boxes() const;
  const GroundTruthImage* find(const std::string& name) const;
};

GroundTruthDocument parse_ground_truth(const std::string& text,
                                       const std::string& origin = "<memory>");
GroundTruthDocument load_ground_truth(const std::filesystem::path& path);
std::string serialize_ground_truth(const GroundTruthDocument& doc);
void save_ground_truth(const GroundTruthDocument& doc, const std::filesystem::path& path);

/// Detections file: one JSON object per line,
///   {"image": "f.ppm", "detections": [{"category": "person",
///                                      "box": [x1, y1, x2, y2], "score": s}]}
struct ImageDetections {
  std::string image;
  std::vector<Detection> detections;
};

std::string serialize_detections(const std::vector<ImageDetections>& records,
                                 const std::vector<std::string>& categories = {"person"});
std::vector<ImageDetections> parse_detections(
    const std::string& text, const std::vector<std::string>& categories = {"person"},
    const std::string& origin = "<memory>");
std::vector<ImageDetections> load_detections(
    const std::filesystem::path& path,
    const std::vector<std::string>& categories = {"person"});
void save_detections(const std::vector<ImageDetections>& records,
                     const std::filesystem::path& path,
                     const std::vector<std::string>& categories = {"person"});

}  // namespace adas
