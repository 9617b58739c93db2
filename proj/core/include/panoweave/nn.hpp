#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "panoweave/rng.hpp"
#include "panoweave/tensor.hpp"

// Minimal training-capable layer set. Every layer implements an explicit
// backward pass that accumulates parameter gradients and returns input
// gradients; correctness is pinned by finite-difference tests.

namespace panoweave {

/// A batch of equally-shaped feature maps (size 1 for the panorama branch,
/// N views for the perspective branch).
using Batch = std::vector<Tensor>;

/// Horizontal padding behaviour of convolutions. Circular wraps columns
/// (the panorama branch); zero pads everything (perspective views).
/// Vertical padding is always zero: ERP does not wrap over the poles.
enum class PadMode { kZero, kCircular };

/// Named view into a parameter block and its gradient accumulator.
struct ParamRef {
  std::string name;
  double* value;
  double* grad;
  std::size_t size;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_ch, int out_ch, int ksize, int stride);

  void init_he(Rng& rng);  // N(0, sqrt(2/fan_in)) weights, zero bias
  void init_zero();

  Batch forward(const Batch& x, PadMode pad) const;
  /// Accumulates weight/bias gradients and returns input gradients.
  Batch backward(const Batch& x, const Batch& dy, PadMode pad);

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

  int out_size(int in) const;  // spatial size after this conv

  int in_ch = 0, out_ch = 0, ksize = 1, stride = 1;
  Eigen::MatrixXd weight;  // out_ch x (in_ch * k * k)
  Eigen::VectorXd bias;
  Eigen::MatrixXd weight_grad;
  Eigen::VectorXd bias_grad;
};

Batch silu(const Batch& x);
Batch silu_backward(const Batch& x, const Batch& dy);

/// Nearest-neighbour 2x upsampling.
Batch upsample2x(const Batch& x);
Batch upsample2x_backward(const Batch& dy);

Batch add(const Batch& a, const Batch& b);

/// Interleaved sin/cos features of a scalar timestep, log-spaced
/// frequencies from 1 down to 1/10000.
Eigen::VectorXd time_features(double t, int dim);

/// Per-channel scale and shift conditioned on (timestep, class id):
/// e = W·time_features(t) + b + table[y], out_c = x_c·(1 + e_c) + e_{C+c}.
class Film {
 public:
  Film() = default;
  Film(int channels, int classes, int time_dim = 32);

  void init(Rng& rng);  // small random table/projection, zero shift

  Batch forward(const Batch& x, int t, int y) const;
  Batch backward(const Batch& x, const Batch& dy, int t, int y);

  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);

  int channels = 0, classes = 0, time_dim = 0;
  Eigen::MatrixXd w_time;  // 2C x time_dim
  Eigen::VectorXd b;       // 2C
  Eigen::MatrixXd table;   // classes x 2C
  Eigen::MatrixXd w_time_grad;
  Eigen::VectorXd b_grad;
  Eigen::MatrixXd table_grad;

 private:
  Eigen::VectorXd embedding(int t, int y) const;
};

}  // namespace panoweave
