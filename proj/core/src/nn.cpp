#include "panoweave/nn.hpp"

#include <cmath>

#include "panoweave/errors.hpp"

namespace panoweave {

namespace {

void check_batch(const Batch& x, const char* who) {
  if (x.empty()) throw ShapeError(std::string(who) + ": empty batch");
  for (const Tensor& t : x) {
    if (!t.same_shape(x.front())) {
      throw ShapeError(std::string(who) + ": ragged batch");
    }
  }
}

inline int wrap(int c, int w) {
  int r = c % w;
  return r < 0 ? r + w : r;
}

// Patch matrix: rows enumerate (in_ch, ky, kx), columns enumerate output
// positions of every batch element, in batch-major order.
Eigen::MatrixXd im2col(const Batch& x, int k, int stride, PadMode pad,
                       int oh, int ow) {
  int c_in = x.front().channels();
  int h = x.front().height();
  int w = x.front().width();
  int p = k / 2;
  Eigen::MatrixXd cols(c_in * k * k, static_cast<Eigen::Index>(x.size()) * oh * ow);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const Tensor& img = x[n];
    Eigen::Index base = static_cast<Eigen::Index>(n) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        Eigen::Index col = base + static_cast<Eigen::Index>(oy) * ow + ox;
        int row = 0;
        for (int c = 0; c < c_in; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            int iy = oy * stride - p + ky;
            bool off_v = iy < 0 || iy >= h;
            for (int kx = 0; kx < k; ++kx, ++row) {
              int ix = ox * stride - p + kx;
              double v = 0.0;
              if (!off_v) {
                if (pad == PadMode::kCircular) {
                  v = img.at(c, iy, wrap(ix, w));
                } else if (ix >= 0 && ix < w) {
                  v = img.at(c, iy, ix);
                }
              }
              cols(row, col) = v;
            }
          }
        }
      }
    }
  }
  return cols;
}

// Scatter-add of patch-space gradients back to input space.
void col2im(const Eigen::MatrixXd& cols, Batch& dx, int k, int stride,
            PadMode pad, int oh, int ow) {
  int c_in = dx.front().channels();
  int h = dx.front().height();
  int w = dx.front().width();
  int p = k / 2;
  for (std::size_t n = 0; n < dx.size(); ++n) {
    Tensor& img = dx[n];
    Eigen::Index base = static_cast<Eigen::Index>(n) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        Eigen::Index col = base + static_cast<Eigen::Index>(oy) * ow + ox;
        int row = 0;
        for (int c = 0; c < c_in; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            int iy = oy * stride - p + ky;
            bool off_v = iy < 0 || iy >= h;
            for (int kx = 0; kx < k; ++kx, ++row) {
              if (off_v) continue;
              int ix = ox * stride - p + kx;
              if (pad == PadMode::kCircular) {
                img.at(c, iy, wrap(ix, w)) += cols(row, col);
              } else if (ix >= 0 && ix < w) {
                img.at(c, iy, ix) += cols(row, col);
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Conv2d::Conv2d(int in_ch_, int out_ch_, int ksize_, int stride_)
    : in_ch(in_ch_), out_ch(out_ch_), ksize(ksize_), stride(stride_) {
  if (in_ch <= 0 || out_ch <= 0 || ksize <= 0 || ksize % 2 == 0 ||
      (stride != 1 && stride != 2)) {
    throw DomainError("conv wants odd kernel and stride 1 or 2");
  }
  weight = Eigen::MatrixXd::Zero(out_ch, in_ch * ksize * ksize);
  bias = Eigen::VectorXd::Zero(out_ch);
  weight_grad = Eigen::MatrixXd::Zero(out_ch, in_ch * ksize * ksize);
  bias_grad = Eigen::VectorXd::Zero(out_ch);
}

void Conv2d::init_he(Rng& rng) {
  double std = std::sqrt(2.0 / (in_ch * ksize * ksize));
  for (Eigen::Index i = 0; i < weight.size(); ++i) {
    weight.data()[i] = std * rng.normal();
  }
  bias.setZero();
}

void Conv2d::init_zero() {
  weight.setZero();
  bias.setZero();
}

int Conv2d::out_size(int in) const {
  int p = ksize / 2;
  return (in + 2 * p - ksize) / stride + 1;
}

Batch Conv2d::forward(const Batch& x, PadMode pad) const {
  check_batch(x, "conv");
  if (x.front().channels() != in_ch) {
    throw ShapeError("conv input channel mismatch");
  }
  int oh = out_size(x.front().height());
  int ow = out_size(x.front().width());
  Eigen::MatrixXd cols = im2col(x, ksize, stride, pad, oh, ow);
  Eigen::MatrixXd y = weight * cols;
  y.colwise() += bias;

  Batch out(x.size(), Tensor(out_ch, oh, ow));
  for (std::size_t n = 0; n < x.size(); ++n) {
    Eigen::Index base = static_cast<Eigen::Index>(n) * oh * ow;
    for (int c = 0; c < out_ch; ++c) {
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(oh) * ow; ++i) {
        out[n][static_cast<std::size_t>(c) * oh * ow + i] = y(c, base + i);
      }
    }
  }
  return out;
}

Batch Conv2d::backward(const Batch& x, const Batch& dy, PadMode pad) {
  check_batch(x, "conv");
  check_batch(dy, "conv grad");
  int oh = out_size(x.front().height());
  int ow = out_size(x.front().width());
  if (dy.front().channels() != out_ch || dy.front().height() != oh ||
      dy.front().width() != ow || dy.size() != x.size()) {
    throw ShapeError("conv backward shape mismatch");
  }

  Eigen::MatrixXd dy_mat(out_ch, static_cast<Eigen::Index>(x.size()) * oh * ow);
  for (std::size_t n = 0; n < dy.size(); ++n) {
    Eigen::Index base = static_cast<Eigen::Index>(n) * oh * ow;
    for (int c = 0; c < out_ch; ++c) {
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(oh) * ow; ++i) {
        dy_mat(c, base + i) = dy[n][static_cast<std::size_t>(c) * oh * ow + i];
      }
    }
  }

  Eigen::MatrixXd cols = im2col(x, ksize, stride, pad, oh, ow);
  weight_grad += dy_mat * cols.transpose();
  bias_grad += dy_mat.rowwise().sum();

  Eigen::MatrixXd dcols = weight.transpose() * dy_mat;
  Batch dx(x.size(), Tensor(in_ch, x.front().height(), x.front().width()));
  col2im(dcols, dx, ksize, stride, pad, oh, ow);
  return dx;
}

void Conv2d::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", weight.data(), weight_grad.data(),
                 static_cast<std::size_t>(weight.size())});
  out.push_back({prefix + ".bias", bias.data(), bias_grad.data(),
                 static_cast<std::size_t>(bias.size())});
}

Batch silu(const Batch& x) {
  Batch out = x;
  for (Tensor& t : out) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      double v = t[i];
      t[i] = v / (1.0 + std::exp(-v));
    }
  }
  return out;
}

Batch silu_backward(const Batch& x, const Batch& dy) {
  Batch dx = dy;
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t i = 0; i < x[n].size(); ++i) {
      double v = x[n][i];
      double s = 1.0 / (1.0 + std::exp(-v));
      dx[n][i] = dy[n][i] * s * (1.0 + v * (1.0 - s));
    }
  }
  return dx;
}

Batch upsample2x(const Batch& x) {
  Batch out;
  out.reserve(x.size());
  for (const Tensor& t : x) {
    Tensor u(t.channels(), t.height() * 2, t.width() * 2);
    for (int c = 0; c < t.channels(); ++c) {
      for (int y = 0; y < u.height(); ++y) {
        for (int i = 0; i < u.width(); ++i) {
          u.at(c, y, i) = t.at(c, y / 2, i / 2);
        }
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

Batch upsample2x_backward(const Batch& dy) {
  Batch dx;
  dx.reserve(dy.size());
  for (const Tensor& t : dy) {
    Tensor d(t.channels(), t.height() / 2, t.width() / 2);
    for (int c = 0; c < t.channels(); ++c) {
      for (int y = 0; y < t.height(); ++y) {
        for (int i = 0; i < t.width(); ++i) {
          d.at(c, y / 2, i / 2) += t.at(c, y, i);
        }
      }
    }
    dx.push_back(std::move(d));
  }
  return dx;
}

Batch add(const Batch& a, const Batch& b) {
  if (a.size() != b.size()) throw ShapeError("batch add size mismatch");
  Batch out = a;
  for (std::size_t n = 0; n < a.size(); ++n) out[n] += b[n];
  return out;
}

Eigen::VectorXd time_features(double t, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw DomainError("time feature dim must be positive and even");
  }
  int half = dim / 2;
  Eigen::VectorXd out(dim);
  for (int j = 0; j < half; ++j) {
    double freq = std::exp(-std::log(10000.0) * j / half);
    out(2 * j) = std::sin(t * freq);
    out(2 * j + 1) = std::cos(t * freq);
  }
  return out;
}

Film::Film(int channels_, int classes_, int time_dim_)
    : channels(channels_), classes(classes_), time_dim(time_dim_) {
  if (channels <= 0 || classes <= 0) {
    throw DomainError("film wants positive channel and class counts");
  }
  w_time = Eigen::MatrixXd::Zero(2 * channels, time_dim);
  b = Eigen::VectorXd::Zero(2 * channels);
  table = Eigen::MatrixXd::Zero(classes, 2 * channels);
  w_time_grad = Eigen::MatrixXd::Zero(2 * channels, time_dim);
  b_grad = Eigen::VectorXd::Zero(2 * channels);
  table_grad = Eigen::MatrixXd::Zero(classes, 2 * channels);
}

void Film::init(Rng& rng) {
  double std = 0.1;
  for (Eigen::Index i = 0; i < w_time.size(); ++i) {
    w_time.data()[i] = std * rng.normal();
  }
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    table.data()[i] = std * rng.normal();
  }
  b.setZero();
}

Eigen::VectorXd Film::embedding(int t, int y) const {
  if (y < 0 || y >= classes) throw DomainError("film class id out of range");
  return w_time * time_features(t, time_dim) + b + table.row(y).transpose();
}

Batch Film::forward(const Batch& x, int t, int y) const {
  check_batch(x, "film");
  if (x.front().channels() != channels) {
    throw ShapeError("film channel mismatch");
  }
  Eigen::VectorXd e = embedding(t, y);
  Batch out = x;
  for (Tensor& img : out) {
    int hw = img.height() * img.width();
    for (int c = 0; c < channels; ++c) {
      double scale = 1.0 + e(c);
      double shift = e(channels + c);
      double* p = img.data() + static_cast<std::size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) p[i] = p[i] * scale + shift;
    }
  }
  return out;
}

Batch Film::backward(const Batch& x, const Batch& dy, int t, int y) {
  check_batch(x, "film");
  Eigen::VectorXd e = embedding(t, y);
  Eigen::VectorXd de = Eigen::VectorXd::Zero(2 * channels);
  Batch dx = dy;
  for (std::size_t n = 0; n < x.size(); ++n) {
    int hw = x[n].height() * x[n].width();
    for (int c = 0; c < channels; ++c) {
      const double* px = x[n].data() + static_cast<std::size_t>(c) * hw;
      const double* pd = dy[n].data() + static_cast<std::size_t>(c) * hw;
      double* pdx = dx[n].data() + static_cast<std::size_t>(c) * hw;
      double scale = 1.0 + e(c);
      double ds = 0.0, dsh = 0.0;
      for (int i = 0; i < hw; ++i) {
        ds += pd[i] * px[i];
        dsh += pd[i];
        pdx[i] = pd[i] * scale;
      }
      de(c) += ds;
      de(channels + c) += dsh;
    }
  }
  w_time_grad += de * time_features(t, time_dim).transpose();
  b_grad += de;
  table_grad.row(y) += de.transpose();
  return dx;
}

void Film::collect_params(const std::string& prefix,
                          std::vector<ParamRef>& out) {
  out.push_back({prefix + ".w_time", w_time.data(), w_time_grad.data(),
                 static_cast<std::size_t>(w_time.size())});
  out.push_back({prefix + ".b", b.data(), b_grad.data(),
                 static_cast<std::size_t>(b.size())});
  out.push_back({prefix + ".table", table.data(), table_grad.data(),
                 static_cast<std::size_t>(table.size())});
}

}  // namespace panoweave
