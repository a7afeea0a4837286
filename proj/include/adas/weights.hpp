#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adas/backbone17.hpp"
#include "adas/errors.hpp"
#include "adas/kernels.hpp"

namespace adas {

struct Blob {
  std::string name;
  std::vector<float> values;
  friend bool operator==(const Blob&, const Blob&) = default;
};

/// Flat, ordered parameter blobs exactly as they appear in a B17W file.
struct WeightStore {
  std::vector<Blob> blobs;

  std::uint64_t element_count() const;
  bool all_finite() const;
  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

class WeightFormatError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kCountMismatch, kTrailingData };
  WeightFormatError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kB17WVersion = 1;

/// B17W layout (little-endian): "B17W" | u32 version | u32 blob count |
/// per blob { u16 name length, name, u64 element count, f32 values }.
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);
/// Also checks blob names and sizes against the network layout.
WeightStore load_weights(const std::filesystem::path& path,
                         const NetworkSpec& net);

std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(const std::vector<std::uint8_t>& bytes);

/// Throws WeightFormatError(kCountMismatch) when the store does not match.
void check_layout(const WeightStore& store, const NetworkSpec& net);

enum class WeightInit {
  kZero,    // conv/FC weights and all biases zero, BN identity
  kRandom,  // seeded He-style uniform conv weights, jittered BN
};

WeightStore make_weights(const NetworkSpec& net, WeightInit init,
                         std::uint64_t seed = 0);

/// Typed parameters consumed by the forward pass.
struct SeParams {
  int reduction = 16;
  Matrix fc1_w;  // (c/r) x c
  std::vector<float> fc1_b;
  Matrix fc2_w;  // c x (c/r)
  std::vector<float> fc2_b;

  static SeParams zeros(int channels, int reduction);
};

struct LayerWeights {
  std::vector<ConvParams> convs;
  std::optional<SeParams> se;
};

struct HeadParams {
  ConvParams conv;  // 1x1, BN unused
  std::vector<float> bias;
};

struct NetworkWeights {
  std::vector<LayerWeights> layers;
  std::optional<HeadParams> head;
};

NetworkWeights bind_weights(const NetworkSpec& net, const WeightStore& store);
WeightStore unbind_weights(const NetworkSpec& net, const NetworkWeights& w);

}  // namespace adas
