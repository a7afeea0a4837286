#include "adas/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "adas/errors.hpp"

namespace adas {

RgbImage::RgbImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h) {
  if (w <= 0 || h <= 0) throw InputError("image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
}

void RgbImage::fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r,
                         std::uint8_t g, std::uint8_t b) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width);
  y1 = std::min(y1, height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      std::uint8_t* p = at(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  std::size_t pos = 0;
  auto fail = [&origin](const std::string& why) -> IoError {
    return IoError(origin + ": not a decodable P6 image (" + why + ")");
  };
  auto skip_space = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() {
    skip_space();
    long v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 20) throw fail("dimension too large");
    }
    if (pos == start) throw fail("bad header");
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw fail("missing P6 magic");
  pos = 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (w <= 0 || h <= 0) throw fail("zero size");
  if (maxval != 255) throw fail("only maxval 255 supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("bad header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need) throw fail("truncated pixel data");
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes, path.string());
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor4 to_input_tensor(const RgbImage& image, int size) {
  if (image.empty()) throw InputError("cannot preprocess an empty image");
  if (size <= 0) throw InputError("input size must be positive");
  Tensor4 t({1, 3, size, size});
  const double sx = static_cast<double>(image.width) / size;
  const double sy = static_cast<double>(image.height) / size;
  for (int y = 0; y < size; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < size; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(x0, y0)[c] * (1 - wx) + image.at(x1, y0)[c] * wx;
        const double bot = image.at(x0, y1)[c] * (1 - wx) + image.at(x1, y1)[c] * wx;
        t.at(0, c, y, x) = static_cast<float>((top * (1 - wy) + bot * wy) / 255.0);
      }
    }
  }
  return t;
}

Tensor4 preprocess(const std::filesystem::path& path, int input_size) {
  const RgbImage img = read_ppm(path);
  return to_input_tensor(img, input_size);
}

void draw_box(RgbImage& image, const Box& box, Color color, int thickness) {
  const int x0 = static_cast<int>(std::floor(box.x_min));
  const int y0 = static_cast<int>(std::floor(box.y_min));
  const int x1 = static_cast<int>(std::ceil(box.x_max));
  const int y1 = static_cast<int>(std::ceil(box.y_max));
  const int t = std::max(1, thickness);
  image.fill_rect(x0, y0, x1, y0 + t, color.r, color.g, color.b);
  image.fill_rect(x0, y1 - t, x1, y1, color.r, color.g, color.b);
  image.fill_rect(x0, y0, x0 + t, y1, color.r, color.g, color.b);
  image.fill_rect(x1 - t, y0, x1, y1, color.r, color.g, color.b);
}

}  // namespace adas
