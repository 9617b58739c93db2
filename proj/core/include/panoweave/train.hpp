#pragma once

#include <cstdint>
#include <vector>

#include "panoweave/denoiser.hpp"
#include "panoweave/schedule.hpp"
#include "panoweave/synth.hpp"

namespace panoweave {

/// One optimisation step's loss breakdown.
struct LossParts {
  double total = 0.0;
  double pano = 0.0;
  double views = 0.0;
  int t = -1;
};

/// Mean squared error, averaged over all entries.
double mse(const Tensor& pred, const Tensor& target);

/// Panorama MSE plus the view-count average of the per-view MSEs; the two
/// branches are weighted equally no matter how many views the rig has.
double combined_mse(const Tensor& pano_pred, const Tensor& pano_true,
                    const Batch& view_preds, const Batch& view_trues);

/// Draws a timestep and jointly-initialised noise, runs the dual forward on
/// the noised sample, and (by default) backpropagates the combined loss into
/// the model's gradient accumulators. Images are mapped from [0, 1] to
/// [-1, 1] before noising.
LossParts combined_loss(ToyDenoiser& model, const NoiseSchedule& sched,
                        const TrainSample& sample, Rng& rng,
                        bool accumulate_grads = true);

struct TrainRunConfig {
  int steps = 2000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  /// Quarter-turn azimuth augmentation: rolls the panorama and re-derives
  /// the views, which is the same data the rig would see after yawing by a
  /// multiple of 90 degrees.
  bool randomize_yaw = false;
  int log_every = 0;  // 0 keeps the loop silent
};

struct TrainResult {
  std::vector<double> losses;  // one combined loss per step
};

/// Plain SGD over the combined loss. Samples are drawn uniformly from data.
/// A non-finite loss or activation aborts with NumericError naming the
/// step.
TrainResult train_toy(ToyDenoiser& model, const NoiseSchedule& sched,
                      const std::vector<TrainSample>& data,
                      const TrainRunConfig& cfg);

}  // namespace panoweave
