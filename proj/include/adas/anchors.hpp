#pragma once

#include <filesystem>
#include <vector>

namespace adas {

/// Prior box size in pixels at the 608x608 reference input.
struct Anchor {
  float w = 0.0f;
  float h = 0.0f;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

using AnchorSet = std::vector<Anchor>;

inline constexpr int kReferenceInput = 608;

/// Five VOC-style priors expressed in reference-input pixels.
AnchorSet default_anchors();

/// Throws ConfigError when empty or any dimension is not positive.
void validate_anchors(const AnchorSet& anchors);

/// Text file, one "w h" pair per line; '#' starts a comment.
AnchorSet load_anchors(const std::filesystem::path& path);
void save_anchors(const AnchorSet& anchors, const std::filesystem::path& path);

/// "w1,h1 w2,h2 ..." inline form used by config files.
AnchorSet parse_anchor_list(const std::string& text);

}  // namespace adas
