#include "adas/anchors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "adas/errors.hpp"

namespace adas {

AnchorSet default_anchors() {
  // YOLOv2 VOC priors (grid units) times the 32 px cell of the reference input.
  return {{42.31f, 55.41f},
          {102.17f, 128.30f},
          {161.79f, 259.17f},
          {303.08f, 154.90f},
          {359.56f, 320.23f}};
}

void validate_anchors(const AnchorSet& anchors) {
  if (anchors.empty()) throw ConfigError("anchor set is empty");
  for (const Anchor& a : anchors) {
    if (!(a.w > 0.0f) || !(a.h > 0.0f) || !std::isfinite(a.w) ||
        !std::isfinite(a.h)) {
      throw ConfigError("anchor dimensions must be positive and finite");
    }
  }
}

AnchorSet load_anchors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open anchor file " + path.string());
  AnchorSet anchors;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Anchor a;
    if (!(ls >> a.w)) continue;
    if (!(ls >> a.h)) {
      throw SchemaError(path.string() + ":" + std::to_string(lineno) +
                        ": expected \"w h\"");
    }
    anchors.push_back(a);
  }
  validate_anchors(anchors);
  return anchors;
}

void save_anchors(const AnchorSet& anchors, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write anchor file " + path.string());
  out << "# prior w h in pixels at 608x608\n";
  out.precision(6);
  out << std::fixed;
  for (const Anchor& a : anchors) out << a.w << " " << a.h << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

AnchorSet parse_anchor_list(const std::string& text) {
  AnchorSet anchors;
  std::istringstream is(text);
  std::string pair;
  while (is >> pair) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("anchor \"" + pair + "\" is not of the form w,h");
    }
    try {
      anchors.push_back({std::stof(pair.substr(0, comma)),
                         std::stof(pair.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ConfigError("anchor \"" + pair + "\" is not numeric");
    }
  }
  validate_anchors(anchors);
  return anchors;
}

}  // namespace adas
