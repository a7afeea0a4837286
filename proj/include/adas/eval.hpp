#pragma once

#include <string>
#include <vector>

#include "adas/boxes.hpp"

namespace adas {

/// A detection or label tagged with the image it belongs to.
struct ScoredBox {
  std::string image;
  Detection det;
};

struct LabeledBox {
  std::string image;
  Box box;
  int category = 0;
};

struct MatchResult {
  std::vector<ScoredBox> ordered;  // detections in evaluation order
  std::vector<bool> true_positive;  // parallel to `ordered`
};

/// Greedy VOC matching: detections in descending score (ties by image name
/// then box order); each takes its best-IoU unmatched ground truth of the
/// same image and category when that IoU >= iou_threshold.
MatchResult match_detections(std::vector<ScoredBox> dets,
                             const std::vector<LabeledBox>& gts,
                             double iou_threshold);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

enum class ApMode { kAllPoint, kElevenPoint };

struct ApResult {
  double ap = 0.0;
  std::vector<PrPoint> pr_points;
};

/// Flags must be in evaluation order. Throws EvalError if total_gt < 1.
ApResult average_precision(const std::vector<bool>& flags, int total_gt,
                           ApMode mode = ApMode::kAllPoint);

struct ReferenceRow {
  std::string model;
  std::string ap30;
  std::string ap50;
  std::string true_positives;
  std::string labels;
};

/// Faster R-CNN comparison figure reported on full-scale person data.
std::vector<ReferenceRow> default_reference_rows();

struct EvalReport {
  double iou_threshold = 0.5;
  ApMode mode = ApMode::kAllPoint;
  double ap = 0.0;
  int true_positive_count = 0;
  int detection_count = 0;
  int label_count = 0;
  std::vector<PrPoint> pr_points;
  std::vector<ReferenceRow> reference_rows;

  /// TP / labels as a percentage, rounded to one decimal.
  double true_positive_percent() const;
};

EvalReport evaluate(std::vector<ScoredBox> dets, const std::vector<LabeledBox>& gts,
                    double iou_threshold, ApMode mode = ApMode::kAllPoint);

/// Reads a detections file (NDJSON) and a ground-truth document.
EvalReport evaluate_files(const std::string& dets_path, const std::string& gt_path,
                          double iou_threshold, ApMode mode = ApMode::kAllPoint);

/// Comparison table with one row per report plus the reference rows.
std::string render_table(const std::vector<EvalReport>& reports,
                         const std::string& model_name = "Backbone17-Det");
std::string render_json(const std::vector<EvalReport>& reports);

}  // namespace adas
