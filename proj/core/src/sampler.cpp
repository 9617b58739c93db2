#include "panoweave/sampler.hpp"

#include <cmath>

#include "panoweave/errors.hpp"
#include "panoweave/resample.hpp"

namespace panoweave {

namespace {

// x_prev = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps_hat
//        + sigma z
void ddim_update(Tensor& x, const Tensor& eps, double ab_t, double ab_prev,
                 double sigma, const Tensor* z) {
  const double sq_ab = std::sqrt(ab_t);
  const double sq_1m = std::sqrt(1.0 - ab_t);
  const double dir = std::sqrt(
      std::max(0.0, 1.0 - ab_prev - sigma * sigma));
  const double sq_prev = std::sqrt(ab_prev);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = (x[i] - sq_1m * eps[i]) / sq_ab;
    x[i] = sq_prev * x0 + dir * eps[i];
    if (z) x[i] += sigma * (*z)[i];
  }
}

}  // namespace

SampleResult ddim_sample(const ToyDenoiser& model, const NoiseSchedule& sched,
                         const SamplerConfig& cfg, int y) {
  const int total = sched.steps();
  const int s = cfg.ddim_steps;
  if (s < 1 || s > total) {
    throw DomainError("ddim_steps must lie in [1, schedule steps]");
  }
  if (cfg.eta < 0.0) throw DomainError("eta must be non-negative");

  const DenoiserConfig& mcfg = model.config();
  const ErpGrid& grid = mcfg.grid;
  Rng rng(cfg.seed);

  Tensor pano(mcfg.image_channels, grid.height, grid.width);
  Batch views;
  if (cfg.joint_init) {
    JointNoise jn =
        joint_noise_draw(grid, model.rig(), rng, mcfg.image_channels);
    pano = std::move(jn.pano);
    views.reserve(jn.views.size());
    for (PerspImage& v : jn.views) views.push_back(std::move(v.data));
  } else {
    rng.fill_normal(pano);
    const int vs = grid.view_size();
    for (std::size_t i = 0; i < model.rig().poses.size(); ++i) {
      Tensor v(mcfg.image_channels, vs, vs);
      rng.fill_normal(v);
      views.push_back(std::move(v));
    }
  }

  // Quarter turns currently applied to the stored panorama latent.
  int roll_state = 0;

  for (int i = s - 1; i >= 0; --i) {
    const int t = static_cast<int>(
        (static_cast<std::int64_t>(i) + 1) * total / s - 1);
    const int t_prev = i == 0 ? -1
                              : static_cast<int>(
                                    static_cast<std::int64_t>(i) * total / s -
                                    1);
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t_prev);
    const double sigma =
        cfg.eta *
        std::sqrt((1.0 - ab_prev) / (1.0 - ab_t)) *
        std::sqrt(1.0 - ab_t / ab_prev);

    // The model always sees the canonical orientation.
    ErpImage canonical =
        latent_roll(ErpImage(pano), -roll_state);
    const DualPrediction pred =
        model.forward(canonical.data, views, t, y);
    const Tensor eps_pano =
        latent_roll(ErpImage(pred.pano), roll_state).data;

    Tensor z_pano;
    Batch z_views;
    const bool stochastic = sigma > 0.0;
    if (stochastic) {
      z_pano = Tensor(pano.channels(), pano.height(), pano.width());
      rng.fill_normal(z_pano);
      for (const Tensor& v : views) {
        Tensor z(v.channels(), v.height(), v.width());
        rng.fill_normal(z);
        z_views.push_back(std::move(z));
      }
    }

    ddim_update(pano, eps_pano, ab_t, ab_prev, sigma,
                stochastic ? &z_pano : nullptr);
    for (std::size_t n = 0; n < views.size(); ++n) {
      ddim_update(views[n], pred.views[n], ab_t, ab_prev, sigma,
                  stochastic ? &z_views[n] : nullptr);
    }

    if (cfg.latent_rotation) {
      pano = latent_roll(ErpImage(std::move(pano)), 1).data;
      roll_state = (roll_state + 1) % 4;
    }
  }

  pano = latent_roll(ErpImage(std::move(pano)), -roll_state).data;
  if (cfg.decode_circular_pad) {
    pano = circular_crop(circular_pad(pano, 2), 2);
  }

  SampleResult out;
  out.pano = ErpImage(std::move(pano));
  const CameraIntrinsics intr = CameraIntrinsics::make(
      model.rig().intrinsics.fov_deg, grid.view_size(), grid.view_size());
  out.views.reserve(views.size());
  for (std::size_t n = 0; n < views.size(); ++n) {
    out.views.emplace_back(std::move(views[n]), model.rig().poses[n], intr);
  }
  return out;
}

}  // namespace panoweave
