#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "adas/boxes.hpp"
#include "adas/tensor.hpp"

namespace adas {

/// 8-bit interleaved RGB frame.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0);

  bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }
  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  void fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b);
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Binary PPM (P6, maxval 255). Errors name the file.
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& origin);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

/// Bilinear resize (pixel-center aligned) of an RGB image into a
/// (1,3,size,size) tensor scaled to [0,1]; aspect ratio is not preserved.
Tensor4 to_input_tensor(const RgbImage& image, int size);

/// Reads the file and resizes; throws IoError naming the file.
Tensor4 preprocess(const std::filesystem::path& path, int input_size);

struct Color {
  std::uint8_t r = 0, g = 0, b = 0;
};
inline constexpr Color kGroundTruthColor{255, 0, 0};
inline constexpr Color kDetectionColor{0, 255, 0};

/// Rectangle outline, clipped to the image.
void draw_box(RgbImage& image, const Box& box, Color color, int thickness = 2);

}  // namespace adas
