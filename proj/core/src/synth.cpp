#include "panoweave/synth.hpp"

#include <algorithm>
#include <cmath>

#include "panoweave/errors.hpp"
#include "panoweave/resample.hpp"
#include "panoweave/rng.hpp"

namespace panoweave {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

std::vector<PerspImage> make_views(const ErpImage& pano,
                                   const CameraRig& rig) {
  const ErpGrid grid = pano.grid();
  const CameraIntrinsics intr = CameraIntrinsics::make(
      rig.intrinsics.fov_deg, grid.view_size(), grid.view_size());
  std::vector<PerspImage> views;
  views.reserve(rig.poses.size());
  for (const CameraPose& pose : rig.poses) {
    views.push_back(
        project_erp_to_persp(pano, pose, intr, SampleMode::kBilinear));
  }
  return views;
}

TrainSample make_train_sample(ErpImage pano, int label, const CameraRig& rig,
                              double sun_azimuth) {
  TrainSample s;
  s.views = make_views(pano, rig);
  s.pano = std::move(pano);
  s.label = label;
  s.sun_azimuth = sun_azimuth;
  return s;
}

TrainSample synth_panorama(std::uint64_t seed, const SynthParams& params) {
  if (params.label_buckets < 1) {
    throw DomainError("label_buckets must be positive");
  }
  if (!(params.sun_radius > 0.0)) {
    throw DomainError("sun_radius must be positive");
  }
  Rng rng(seed);
  const double drawn = rng.uniform() * 2.0 * kPi - kPi;
  const double sun_az = params.sun_azimuth.value_or(drawn);
  if (!(sun_az >= -kPi && sun_az < kPi)) {
    throw DomainError("sun azimuth must lie in [-pi, pi)");
  }

  const Eigen::Vector3d sun_dir =
      unit_from_sph(SphericalCoord::make(sun_az, params.sun_elevation));
  const double sky[3] = {0.35, 0.45, 0.60};
  const double ground[3] = {0.40, 0.33, 0.27};
  const double sun_tint[3] = {1.0, 0.9, 0.7};

  const ErpGrid& grid = params.grid;
  Tensor img(3, grid.height, grid.width);
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const SphericalCoord c = sph_from_erp_pixel(grid, u + 0.5, v + 0.5);
      const Eigen::Vector3d dir = unit_from_sph(c);

      const double m = (std::sin(c.phi) + 1.0) * 0.5;
      double rgb[3];
      for (int ch = 0; ch < 3; ++ch) {
        rgb[ch] = ground[ch] * (1.0 - m) + sky[ch] * m;
      }

      const double cosang = std::clamp(dir.dot(sun_dir), -1.0, 1.0);
      const double ang = std::acos(cosang) / params.sun_radius;
      const double glow = 0.3 * std::exp(-ang * ang);
      for (int ch = 0; ch < 3; ++ch) rgb[ch] += sun_tint[ch] * glow;

      if (dir.z() < 0.0) {
        const double s = -1.0 / dir.z();  // hit on the floor plane z = -1
        const double px = s * dir.x();
        const double py = s * dir.y();
        const double checker = std::sin(kPi * px) * std::sin(kPi * py);
        const double fade = 1.0 / (1.0 + 0.15 * s * s);
        for (int ch = 0; ch < 3; ++ch) rgb[ch] += 0.12 * checker * fade;
      }

      for (int ch = 0; ch < 3; ++ch) img.at(ch, v, u) = clamp01(rgb[ch]);
    }
  }

  const double frac = (sun_az + kPi) / (2.0 * kPi);
  int label = static_cast<int>(frac * params.label_buckets);
  label = std::clamp(label, 0, params.label_buckets - 1);
  return make_train_sample(ErpImage(std::move(img)), label, params.rig,
                           sun_az);
}

}  // namespace panoweave
