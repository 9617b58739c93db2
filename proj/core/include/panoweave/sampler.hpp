#pragma once

#include <cstdint>
#include <vector>

#include "panoweave/denoiser.hpp"
#include "panoweave/image.hpp"
#include "panoweave/schedule.hpp"

namespace panoweave {

struct SamplerConfig {
  int ddim_steps = 50;
  double eta = 0.0;  // 0 is deterministic DDIM, 1 recovers ancestral noise
  /// Roll the panorama latent by a quarter turn after every step so the
  /// seam keeps moving; the accumulated roll is inverted at the end.
  bool latent_rotation = true;
  /// Run the final latent through a circular pad/crop pair before returning
  /// it; a no-op for the toy decoder but keeps the decode path explicit.
  bool decode_circular_pad = true;
  std::uint64_t seed = 0;
  /// Initialise view noise by projecting the panorama noise (the default);
  /// false draws every view independently, the ablation baseline.
  bool joint_init = true;
};

struct SampleResult {
  ErpImage pano;                  // values roughly in [-1, 1]
  std::vector<PerspImage> views;  // carries the rig poses
};

/// Deterministic-by-seed DDIM sampling of the dual-branch model for class
/// y. The timestep ladder is t_i = (i + 1) * T / S - 1, so a single step
/// denoises from t = T - 1 in one jump.
SampleResult ddim_sample(const ToyDenoiser& model, const NoiseSchedule& sched,
                         const SamplerConfig& cfg, int y);

}  // namespace panoweave
