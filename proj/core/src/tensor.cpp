#include "panoweave/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "panoweave/errors.hpp"

namespace panoweave {

Tensor::Tensor(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 0 || height < 0 || width < 0) {
    throw ShapeError("tensor dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
}

Tensor Tensor::full(int channels, int height, int width, double value) {
  Tensor t(channels, height, width);
  t.fill(value);
  return t;
}

bool Tensor::same_shape(const Tensor& other) const {
  return channels_ == other.channels_ && height_ == other.height_ &&
         width_ == other.width_;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) {
  std::fill(data_.begin(), data_.end(), value);
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw ShapeError("tensor += shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (!same_shape(other)) throw ShapeError("tensor -= shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace panoweave
