#include "adas/weights.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

namespace adas {

std::uint64_t WeightStore::element_count() const {
  std::uint64_t n = 0;
  for (const Blob& b : blobs) n += b.values.size();
  return n;
}

bool WeightStore::all_finite() const {
  return std::all_of(blobs.begin(), blobs.end(), [](const Blob& b) {
    return std::all_of(b.values.begin(), b.values.end(),
                       [](float v) { return std::isfinite(v); });
  });
}

namespace {

constexpr char kMagic[4] = {'B', '1', '7', 'W'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits & 0xFFu));
    bits = static_cast<U>(bits >> 8);
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    need(sizeof(T), what);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_string(std::size_t len) {
    need(len, "blob name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  void need(std::uint64_t n, const char* what) const {
    if (n > bytes_.size() - pos_) {
      throw WeightFormatError(WeightFormatError::Kind::kTruncated,
                              std::string("weight file truncated while reading ") +
                                  what);
    }
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

// Uniform in [-limit, limit) from raw 64-bit output; portable across
// standard libraries, unlike std::uniform_real_distribution.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  float operator()(float lo, float hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return static_cast<float>(lo + (hi - lo) * u);
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(16 + store.element_count() * 4 + store.blobs.size() * 32);
  put_le(out, kB17WVersion);
  put_le(out, static_cast<std::uint32_t>(store.blobs.size()));
  for (const Blob& b : store.blobs) {
    if (b.name.size() > 0xFFFF) throw ConfigError("blob name too long: " + b.name);
    put_le(out, static_cast<std::uint16_t>(b.name.size()));
    out.insert(out.end(), b.name.begin(), b.name.end());
    put_le(out, static_cast<std::uint64_t>(b.values.size()));
    for (float v : b.values) put_le(out, v);
  }
  return out;
}

WeightStore decode_weights(const std::vector<std::uint8_t>& bytes) {
  using Kind = WeightFormatError::Kind;
  Reader r(bytes);
  r.need(4, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw WeightFormatError(Kind::kBadMagic, "not a B17W weight file (bad magic)");
  }
  r.get_string(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kB17WVersion) {
    throw WeightFormatError(Kind::kBadVersion,
                            "unsupported B17W version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("blob count");
  WeightStore store;
  store.blobs.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Blob b;
    const auto len = r.get<std::uint16_t>("blob name length");
    b.name = r.get_string(len);
    const auto elems = r.get<std::uint64_t>("element count");
    if (elems > r.remaining() / 4) {
      throw WeightFormatError(Kind::kTruncated,
                              "weight file truncated inside blob " + b.name);
    }
    b.values.resize(elems);
    for (auto& v : b.values) v = r.get<float>("blob values");
    store.blobs.push_back(std::move(b));
  }
  if (r.remaining() != 0) {
    throw WeightFormatError(Kind::kTrailingData,
                            std::to_string(r.remaining()) +
                                " trailing bytes after last blob");
  }
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

WeightStore load_weights(const std::filesystem::path& path,
                         const NetworkSpec& net) {
  WeightStore store = load_weights(path);
  check_layout(store, net);
  return store;
}

void check_layout(const WeightStore& store, const NetworkSpec& net) {
  using Kind = WeightFormatError::Kind;
  const auto layout = blob_layout(net);
  if (layout.size() != store.blobs.size()) {
    throw WeightFormatError(Kind::kCountMismatch,
                            "expected " + std::to_string(layout.size()) +
                                " blobs, file has " +
                                std::to_string(store.blobs.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const Blob& b = store.blobs[i];
    if (b.name != layout[i].name || b.values.size() != layout[i].count) {
      throw WeightFormatError(
          Kind::kCountMismatch,
          "blob " + std::to_string(i) + ": expected " + layout[i].name + "[" +
              std::to_string(layout[i].count) + "], found " + b.name + "[" +
              std::to_string(b.values.size()) + "]");
    }
  }
}

WeightStore make_weights(const NetworkSpec& net, WeightInit init,
                         std::uint64_t seed) {
  Uniform uni(seed);
  const bool random = init == WeightInit::kRandom;
  auto fill = [&](Blob& b, float lo, float hi) {
    for (float& v : b.values) v = random ? uni(lo, hi) : 0.0f;
  };

  WeightStore store;
  for (const BlobSpec& spec : blob_layout(net)) {
    Blob b{spec.name, std::vector<float>(spec.count, 0.0f)};
    const std::string& n = spec.name;
    auto ends_with = [&n](std::string_view suffix) {
      return n.size() >= suffix.size() &&
             n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".bn_scale")) {
      if (random) fill(b, 0.8f, 1.2f);
      else std::fill(b.values.begin(), b.values.end(), 1.0f);
    } else if (ends_with(".bn_var")) {
      if (random) fill(b, 0.5f, 1.5f);
      else std::fill(b.values.begin(), b.values.end(), 1.0f);
    } else if (ends_with(".bn_bias") || ends_with(".bn_mean")) {
      fill(b, -0.1f, 0.1f);
    } else if (n.starts_with("head.")) {
      if (ends_with(".weights")) {
        const float lim = 1.0f / std::sqrt(static_cast<float>(net.head_in_channels()));
        fill(b, -lim, lim);
      }
    } else {
      // conv weights [out][in][k][k] or SE matrices; fan-in from layout
      float fan_in = 1.0f;
      for (const LayerSpec& l : net.layers) {
        char prefix[16];
        std::snprintf(prefix, sizeof prefix, "l%02d.", l.index);
        if (!n.starts_with(prefix)) continue;
        if (n.find(".se.") != std::string::npos) {
          const int c = l.out_channels();
          fan_in = ends_with("fc1_w") || ends_with("fc1_b")
                       ? static_cast<float>(c)
                       : static_cast<float>(c / net.se_reduction);
        } else {
          const std::size_t j = static_cast<std::size_t>(n[n.find(".conv") + 5] - '0');
          const ConvSpec& c = l.convs.at(j);
          fan_in = static_cast<float>(c.in_channels * c.kernel_size * c.kernel_size);
        }
      }
      const float lim = ends_with("_b") ? 0.1f
                        : ends_with("_w") ? 1.0f / std::sqrt(fan_in)
                                          : std::sqrt(6.0f / fan_in);
      fill(b, -lim, lim);
    }
    store.blobs.push_back(std::move(b));
  }
  return store;
}

SeParams SeParams::zeros(int channels, int reduction) {
  SeParams p;
  p.reduction = reduction;
  const int mid = channels / reduction;
  p.fc1_w = Matrix(mid, channels);
  p.fc1_b.assign(mid, 0.0f);
  p.fc2_w = Matrix(channels, mid);
  p.fc2_b.assign(channels, 0.0f);
  return p;
}

NetworkWeights bind_weights(const NetworkSpec& net, const WeightStore& store) {
  check_layout(store, net);
  std::size_t next = 0;
  auto take = [&]() -> const std::vector<float>& {
    return store.blobs[next++].values;
  };

  NetworkWeights w;
  for (const LayerSpec& l : net.layers) {
    LayerWeights lw;
    for (const ConvSpec& c : l.convs) {
      ConvParams p;
      p.out_channels = c.out_channels;
      p.kernel_size = c.kernel_size;
      p.stride = c.stride;
      p.weights = Tensor4({c.out_channels, c.in_channels, c.kernel_size,
                           c.kernel_size}, take());
      p.bn_scale = take();
      p.bn_bias = take();
      p.bn_mean = take();
      p.bn_var = take();
      lw.convs.push_back(std::move(p));
    }
    if (l.se) {
      const int c = l.out_channels();
      const int mid = c / net.se_reduction;
      SeParams se;
      se.reduction = net.se_reduction;
      se.fc1_w = Matrix(mid, c);
      se.fc1_w.data = take();
      se.fc1_b = take();
      se.fc2_w = Matrix(c, mid);
      se.fc2_w.data = take();
      se.fc2_b = take();
      lw.se = std::move(se);
    }
    w.layers.push_back(std::move(lw));
  }
  if (net.has_head()) {
    HeadParams h;
    h.conv = ConvParams::identity_bn(net.head_in_channels(),
                                     net.head_out_channels(), 1, 1);
    h.conv.weights = Tensor4({net.head_out_channels(), net.head_in_channels(), 1, 1},
                             take());
    h.bias = take();
    w.head = std::move(h);
  }
  return w;
}

WeightStore unbind_weights(const NetworkSpec& net, const NetworkWeights& w) {
  const auto layout = blob_layout(net);
  WeightStore store;
  std::size_t next = 0;
  auto put = [&](const std::vector<float>& values) {
    if (next >= layout.size()) throw ConfigError("more parameter blobs than layout");
    store.blobs.push_back({layout[next++].name, values});
  };
  for (const LayerWeights& lw : w.layers) {
    for (const ConvParams& p : lw.convs) {
      put(p.weights.values());
      put(p.bn_scale);
      put(p.bn_bias);
      put(p.bn_mean);
      put(p.bn_var);
    }
    if (lw.se) {
      put(lw.se->fc1_w.data);
      put(lw.se->fc1_b);
      put(lw.se->fc2_w.data);
      put(lw.se->fc2_b);
    }
  }
  if (w.head) {
    put(w.head->conv.weights.values());
    put(w.head->bias);
  }
  check_layout(store, net);
  return store;
}

}  // namespace adas
