#pragma once

#include <cstddef>
#include <vector>

namespace panoweave {

/// Dense row-major [channel][row][column] tensor of doubles. All image-like
/// data in the library (panoramas, perspective views, feature maps, weight
/// maps) lives in this one type; rank-1/2 data uses Eigen directly.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width);  // zero filled

  static Tensor full(int channels, int height, int width, double value);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  bool same_shape(const Tensor& other) const;
  bool all_finite() const;
  void fill(double value);

  Tensor& operator+=(const Tensor& other);  // shape checked
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// max_i |a_i - b_i|; shape checked.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace panoweave
