#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "panoweave/image.hpp"

namespace panoweave {

/// Synthetic panorama generator settings. Each seed yields a scene with a
/// sun disk at a random azimuth, a vertical sky/ground gradient, and a
/// distance-faded checker on the floor plane, so the data has exactly the
/// structures the metrics look for: a bright landmark, a seam-free gradient,
/// and high-frequency texture.
struct SynthParams {
  ErpGrid grid;
  CameraRig rig;
  double sun_elevation = 0.6;  // radians above the horizon
  double sun_radius = 0.21;    // angular falloff of the sun disk
  int label_buckets = 8;       // sun azimuth buckets used as the class id
  std::optional<double> sun_azimuth;  // fixed azimuth instead of a random one
};

/// A panorama with its class label and the perspective views cut from it.
struct TrainSample {
  ErpImage pano;                  // RGB in [0, 1]
  std::vector<PerspImage> views;  // bilinear projections, size H/2
  int label = 0;
  double sun_azimuth = 0.0;
};

/// Derives the rig views of a panorama. View resolution is half the
/// panorama height, matching the dual-branch model input.
std::vector<PerspImage> make_views(const ErpImage& pano, const CameraRig& rig);

TrainSample make_train_sample(ErpImage pano, int label, const CameraRig& rig,
                              double sun_azimuth = 0.0);

TrainSample synth_panorama(std::uint64_t seed, const SynthParams& params);

}  // namespace panoweave
