#include "adas/documents.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "adas/errors.hpp"
#include "json.hpp"

namespace adas {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

int category_index(const std::vector<std::string>& categories, const std::string& name,
                   const std::string& where) {
  auto it = std::find(categories.begin(), categories.end(), name);
  if (it == categories.end()) {
    throw SchemaError(where + ": unknown category \"" + name + "\"");
  }
  return static_cast<int>(it - categories.begin());
}

const std::string& category_name(const std::vector<std::string>& categories, int idx) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= categories.size()) {
    throw SchemaError("category index " + std::to_string(idx) + " out of range");
  }
  return categories[idx];
}

float number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw SchemaError(where + ": missing numeric \"" + key + "\"");
  }
  return j.at(key).get<float>();
}

Box checked_box(Box b, const std::string& where) {
  if (!b.valid()) throw SchemaError(where + ": box needs x1 < x2 and y1 < y2");
  return b;
}

}  // namespace

std::vector<LabeledBox> GroundTruthDocument::labeled_boxes() const {
  std::vector<LabeledBox> out;
  for (const GroundTruthImage& img : images) {
    for (const Detection& l : img.labels) out.push_back({img.name, l.box, l.category});
  }
  return out;
}

const GroundTruthImage* GroundTruthDocument::find(const std::string& name) const {
  for (const GroundTruthImage& img : images) {
    if (img.name == name) return &img;
  }
  return nullptr;
}

GroundTruthDocument parse_ground_truth(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin + ": " + e.what());
  }
  GroundTruthDocument doc;
  if (!j.is_object() || !j.contains("images") || !j["images"].is_array()) {
    throw SchemaError(origin + ": expected an object with an \"images\" array");
  }
  if (j.contains("categories")) {
    doc.categories = j["categories"].get<std::vector<std::string>>();
  }
  for (std::size_t i = 0; i < j["images"].size(); ++i) {
    const json& ji = j["images"][i];
    const std::string where = origin + ": images[" + std::to_string(i) + "]";
    if (!ji.contains("name") || !ji["name"].is_string()) {
      throw SchemaError(where + ": missing \"name\"");
    }
    GroundTruthImage img;
    img.name = ji["name"].get<std::string>();
    img.width = ji.value("width", 0);
    img.height = ji.value("height", 0);
    for (std::size_t k = 0; ji.contains("labels") && k < ji["labels"].size(); ++k) {
      const json& jl = ji["labels"][k];
      const std::string lw = where + ".labels[" + std::to_string(k) + "]";
      if (!jl.contains("box2d")) throw SchemaError(lw + ": missing \"box2d\"");
      const json& b = jl["box2d"];
      Detection d;
      d.box = checked_box({number(b, "x1", lw), number(b, "y1", lw), number(b, "x2", lw),
                           number(b, "y2", lw)},
                          lw);
      d.category = category_index(doc.categories, jl.value("category", ""), lw);
      d.score = 1.0f;
      img.labels.push_back(d);
    }
    doc.images.push_back(std::move(img));
  }
  return doc;
}

GroundTruthDocument load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_text(path), path.string());
}

std::string serialize_ground_truth(const GroundTruthDocument& doc) {
  json j;
  j["categories"] = doc.categories;
  j["images"] = json::array();
  for (const GroundTruthImage& img : doc.images) {
    json ji{{"name", img.name}, {"width", img.width}, {"height", img.height}};
    ji["labels"] = json::array();
    for (const Detection& l : img.labels) {
      ji["labels"].push_back({{"category", category_name(doc.categories, l.category)},
                              {"box2d",
                               {{"x1", l.box.x_min},
                                {"y1", l.box.y_min},
                                {"x2", l.box.x_max},
                                {"y2", l.box.y_max}}}});
    }
    j["images"].push_back(std::move(ji));
  }
  return j.dump(2) + "\n";
}

void save_ground_truth(const GroundTruthDocument& doc, const std::filesystem::path& path) {
  write_text(serialize_ground_truth(doc), path);
}

std::string serialize_detections(const std::vector<ImageDetections>& records,
                                 const std::vector<std::string>& categories) {
  std::string out;
  for (const ImageDetections& r : records) {
    json j{{"image", r.image}, {"detections", json::array()}};
    for (const Detection& d : r.detections) {
      j["detections"].push_back(
          {{"category", category_name(categories, d.category)},
           {"box", {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max}},
           {"score", d.score}});
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ImageDetections> parse_detections(const std::string& text,
                                              const std::vector<std::string>& categories,
                                              const std::string& origin) {
  std::vector<ImageDetections> records;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const std::string where = origin + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image") || !j["image"].is_string() ||
        !j.contains("detections") || !j["detections"].is_array()) {
      throw SchemaError(where + ": expected {\"image\": ..., \"detections\": [...]}");
    }
    ImageDetections rec;
    rec.image = j["image"].get<std::string>();
    for (const json& jd : j["detections"]) {
      if (!jd.contains("box") || !jd["box"].is_array() || jd["box"].size() != 4) {
        throw SchemaError(where + ": detection needs a 4-element \"box\"");
      }
      const auto b = jd["box"].get<std::vector<float>>();
      Detection d;
      d.box = checked_box({b[0], b[1], b[2], b[3]}, where);
      d.score = number(jd, "score", where);
      if (!(d.score >= 0.0f && d.score <= 1.0f)) {
        throw SchemaError(where + ": score outside [0, 1]");
      }
      d.category = category_index(categories, jd.value("category", ""), where);
      rec.detections.push_back(d);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ImageDetections> load_detections(const std::filesystem::path& path,
                                             const std::vector<std::string>& categories) {
  return parse_detections(read_text(path), categories, path.string());
}

void save_detections(const std::vector<ImageDetections>& records,
                     const std::filesystem::path& path,
                     const std::vector<std::string>& categories) {
  write_text(serialize_detections(records, categories), path);
}

}  // namespace adas
