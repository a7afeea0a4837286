#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adas {

struct Shape4 {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  friend bool operator==(const Shape4&, const Shape4&) = default;

  std::string str() const;
};

/// Dense NCHW tensor of 32-bit floats.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);
  Tensor4(Shape4 shape, std::vector<float> data);

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }

  // One HxW plane.
  std::span<float> channel(int n, int c) {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }
  std::span<const float> channel(int n, int c) const {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }

  bool all_finite() const;

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }

  Shape4 shape_{};
  std::vector<float> data_ = std::vector<float>(1, 0.0f);
};

/// Row-major rows x cols matrix, used by the SE excitation layers.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  float& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  float operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  static Matrix identity(int n);
};

}  // namespace adas
