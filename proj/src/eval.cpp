#include "adas/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "adas/documents.hpp"
#include "adas/errors.hpp"
#include "json.hpp"

namespace adas {

MatchResult match_detections(std::vector<ScoredBox> dets,
                             const std::vector<LabeledBox>& gts,
                             double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const ScoredBox& a, const ScoredBox& b) {
                     if (a.det.score != b.det.score) return a.det.score > b.det.score;
                     if (a.image != b.image) return a.image < b.image;
                     return detection_order(a.det, b.det);
                   });

  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) by_image[gts[i].image].push_back(i);
  std::vector<bool> matched(gts.size(), false);

  MatchResult result;
  result.true_positive.reserve(dets.size());
  for (const ScoredBox& d : dets) {
    double best = -1.0;
    std::size_t best_idx = 0;
    if (auto it = by_image.find(d.image); it != by_image.end()) {
      for (std::size_t g : it->second) {
        if (matched[g] || gts[g].category != d.det.category) continue;
        const double o = iou(d.det.box, gts[g].box);
        if (o > best) {
          best = o;
          best_idx = g;
        }
      }
    }
    const bool tp = best >= 0.0 && best >= iou_threshold;
    if (tp) matched[best_idx] = true;
    result.true_positive.push_back(tp);
  }
  result.ordered = std::move(dets);
  return result;
}

ApResult average_precision(const std::vector<bool>& flags, int total_gt,
                           ApMode mode) {
  if (total_gt < 1) throw EvalError("average precision undefined without ground truth");
  ApResult r;
  int tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) ++tp;
    r.pr_points.push_back({static_cast<double>(tp) / total_gt,
                           static_cast<double>(tp) / static_cast<double>(i + 1)});
  }
  if (r.pr_points.empty()) return r;

  // precision envelope: max precision at any recall >= this one
  std::vector<double> env(r.pr_points.size());
  double run = 0.0;
  for (std::size_t i = r.pr_points.size(); i-- > 0;) {
    run = std::max(run, r.pr_points[i].precision);
    env[i] = run;
  }

  if (mode == ApMode::kAllPoint) {
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < r.pr_points.size(); ++i) {
      r.ap += (r.pr_points[i].recall - prev_recall) * env[i];
      prev_recall = r.pr_points[i].recall;
    }
  } else {
    for (int k = 0; k <= 10; ++k) {
      const double level = k / 10.0;
      double p = 0.0;
      for (std::size_t i = 0; i < r.pr_points.size(); ++i) {
        if (r.pr_points[i].recall >= level - 1e-12) {
          p = env[i];
          break;
        }
      }
      r.ap += p / 11.0;
    }
  }
  return r;
}

std::vector<ReferenceRow> default_reference_rows() {
  return {{"Faster R-CNN (reference)", "-", "45.4\xC2\xB1" "5.2", "-", "13,262"}};
}

double EvalReport::true_positive_percent() const {
  if (label_count == 0) return 0.0;
  return std::round(1000.0 * true_positive_count / label_count) / 10.0;
}

EvalReport evaluate(std::vector<ScoredBox> dets, const std::vector<LabeledBox>& gts,
                    double iou_threshold, ApMode mode) {
  EvalReport rep;
  rep.iou_threshold = iou_threshold;
  rep.mode = mode;
  rep.detection_count = static_cast<int>(dets.size());
  rep.label_count = static_cast<int>(gts.size());
  const MatchResult m = match_detections(std::move(dets), gts, iou_threshold);
  rep.true_positive_count = static_cast<int>(
      std::count(m.true_positive.begin(), m.true_positive.end(), true));
  ApResult ap = average_precision(m.true_positive, rep.label_count, mode);
  rep.ap = ap.ap;
  rep.pr_points = std::move(ap.pr_points);
  rep.reference_rows = default_reference_rows();
  return rep;
}

EvalReport evaluate_files(const std::string& dets_path, const std::string& gt_path,
                          double iou_threshold, ApMode mode) {
  const GroundTruthDocument gt = load_ground_truth(gt_path);
  const auto records = load_detections(dets_path, gt.categories);
  std::vector<ScoredBox> dets;
  for (const ImageDetections& rec : records) {
    for (const Detection& d : rec.detections) dets.push_back({rec.image, d});
  }
  return evaluate(std::move(dets), gt.labeled_boxes(), iou_threshold, mode);
}

namespace {

std::string thousands(long long v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
  return s;
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // count UTF-8 code points, not bytes
  std::size_t cps = 0;
  for (unsigned char ch : s) cps += (ch & 0xC0) != 0x80;
  if (cps < width) s.append(width - cps, ' ');
  return s;
}

}  // namespace

std::string render_table(const std::vector<EvalReport>& reports,
                         const std::string& model_name) {
  std::ostringstream os;
  const auto row = [&os](const std::string& a, const std::string& b,
                         const std::string& c, const std::string& d,
                         const std::string& e) {
    os << pad(a, 28) << pad(b, 12) << pad(c, 12) << pad(d, 20) << e << "\n";
  };
  row("Model", "AP_30 (%)", "AP_50 (%)", "True Positives", "Labels");
  for (const EvalReport& r : reports) {
    const std::string ap = fixed1(100.0 * r.ap);
    const bool is30 = std::abs(r.iou_threshold - 0.3) < 1e-9;
    const bool is50 = std::abs(r.iou_threshold - 0.5) < 1e-9;
    std::string name = model_name;
    if (!is30 && !is50) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " [AP@%.2f]", r.iou_threshold);
      name += buf;
    }
    row(name, is30 ? ap : "-", is50 || (!is30 && !is50) ? ap : "-",
        thousands(r.true_positive_count) + " (" + fixed1(r.true_positive_percent()) + "%)",
        thousands(r.label_count));
  }
  const auto refs = reports.empty() ? default_reference_rows() : reports.front().reference_rows;
  for (const ReferenceRow& ref : refs) {
    row(ref.model, ref.ap30, ref.ap50, ref.true_positives, ref.labels);
  }
  return os.str();
}

std::string render_json(const std::vector<EvalReport>& reports) {
  nlohmann::json doc;
  doc["reports"] = nlohmann::json::array();
  for (const EvalReport& r : reports) {
    nlohmann::json j;
    j["iou_threshold"] = r.iou_threshold;
    j["interpolation"] = r.mode == ApMode::kAllPoint ? "all_point" : "11_point";
    j["ap"] = r.ap;
    j["true_positives"] = r.true_positive_count;
    j["true_positive_percent"] = r.true_positive_percent();
    j["detections"] = r.detection_count;
    j["labels"] = r.label_count;
    j["pr_points"] = nlohmann::json::array();
    for (const PrPoint& p : r.pr_points) {
      j["pr_points"].push_back({p.recall, p.precision});
    }
    doc["reports"].push_back(std::move(j));
  }
  doc["reference_rows"] = nlohmann::json::array();
  for (const ReferenceRow& ref : default_reference_rows()) {
    doc["reference_rows"].push_back({{"model", ref.model},
                                     {"ap30", ref.ap30},
                                     {"ap50", ref.ap50},
                                     {"true_positives", ref.true_positives},
                                     {"labels", ref.labels}});
  }
  return doc.dump(2);
}

}  // namespace adas
