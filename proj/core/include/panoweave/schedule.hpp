#pragma once

#include <vector>

#include "panoweave/tensor.hpp"

namespace panoweave {

/// Variance schedule for the forward noising process
/// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) eps.
struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // cumulative product of alphas

  int steps() const { return static_cast<int>(betas.size()); }

  /// alpha_bar at timestep t, with alpha_bar(-1) defined as 1 so that t = -1
  /// denotes the clean signal.
  double alpha_bar(int t) const;

  /// Betas linearly spaced from beta_start to beta_end inclusive. A single
  /// step uses beta_start alone.
  static NoiseSchedule linear(int steps, double beta_start = 1e-4,
                              double beta_end = 2e-2);
};

/// Draws x_t from x_0 and a fixed noise tensor.
Tensor add_noise(const NoiseSchedule& sched, const Tensor& x0,
                 const Tensor& noise, int t);

}  // namespace panoweave
