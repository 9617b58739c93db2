#include "panoweave/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "panoweave/errors.hpp"
#include "panoweave/resample.hpp"

namespace panoweave {

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor to_signal(const Tensor& rgb) {
  Tensor out(rgb.channels(), rgb.height(), rgb.width());
  for (std::size_t i = 0; i < rgb.size(); ++i) out[i] = 2.0 * rgb[i] - 1.0;
  return out;
}

Tensor mse_gradient(const Tensor& pred, const Tensor& target, double scale) {
  Tensor g(pred.channels(), pred.height(), pred.width());
  const double k = 2.0 * scale / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    g[i] = k * (pred[i] - target[i]);
  }
  return g;
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw ShapeError("mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double combined_mse(const Tensor& pano_pred, const Tensor& pano_true,
                    const Batch& view_preds, const Batch& view_trues) {
  if (view_preds.size() != view_trues.size()) {
    throw ShapeError("combined_mse: view count mismatch");
  }
  if (view_preds.empty()) throw ShapeError("combined_mse: no views");
  double view_term = 0.0;
  for (std::size_t i = 0; i < view_preds.size(); ++i) {
    view_term += mse(view_preds[i], view_trues[i]);
  }
  view_term /= static_cast<double>(view_preds.size());
  return mse(pano_pred, pano_true) + view_term;
}

LossParts combined_loss(ToyDenoiser& model, const NoiseSchedule& sched,
                        const TrainSample& sample, Rng& rng,
                        bool accumulate_grads) {
  const DenoiserConfig& cfg = model.config();
  const int t = static_cast<int>(rng.integer(sched.steps()));
  const JointNoise noise = joint_noise_draw(cfg.grid, model.rig(), rng,
                                            cfg.image_channels);

  const Tensor pano_x0 = to_signal(sample.pano.data);
  const Tensor pano_xt = add_noise(sched, pano_x0, noise.pano, t);
  Batch views_xt;
  views_xt.reserve(sample.views.size());
  for (std::size_t i = 0; i < sample.views.size(); ++i) {
    views_xt.push_back(add_noise(sched, to_signal(sample.views[i].data),
                                 noise.views[i].data, t));
  }

  DenoiserTrace trace;
  const DualPrediction pred =
      model.forward(pano_xt, views_xt, t, sample.label,
                    accumulate_grads ? &trace : nullptr);

  LossParts parts;
  parts.t = t;
  parts.pano = mse(pred.pano, noise.pano);
  for (std::size_t i = 0; i < pred.views.size(); ++i) {
    parts.views += mse(pred.views[i], noise.views[i].data);
  }
  parts.views /= static_cast<double>(pred.views.size());
  parts.total = parts.pano + parts.views;

  if (accumulate_grads) {
    const Tensor d_pano = mse_gradient(pred.pano, noise.pano, 1.0);
    Batch d_views;
    d_views.reserve(pred.views.size());
    const double k = 1.0 / static_cast<double>(pred.views.size());
    for (std::size_t i = 0; i < pred.views.size(); ++i) {
      d_views.push_back(mse_gradient(pred.views[i], noise.views[i].data, k));
    }
    model.backward(trace, d_pano, d_views);
  }
  return parts;
}

TrainResult train_toy(ToyDenoiser& model, const NoiseSchedule& sched,
                      const std::vector<TrainSample>& data,
                      const TrainRunConfig& cfg) {
  if (data.empty()) throw DomainError("train_toy: empty data set");
  if (cfg.steps < 0) throw DomainError("train_toy: negative step count");
  if (!(cfg.lr > 0.0)) throw DomainError("train_toy: lr must be positive");

  Rng rng(cfg.seed);
  TrainResult result;
  result.losses.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    const TrainSample& base =
        data[static_cast<std::size_t>(rng.integer(data.size()))];
    const TrainSample* sample = &base;
    TrainSample rotated;
    if (cfg.randomize_yaw) {
      const int q = static_cast<int>(rng.integer(4));
      if (q != 0) {
        // Rolling the panorama by q quarter turns shows the model the same
        // scene with the sun azimuth shifted by -q * pi/2.
        double az = base.sun_azimuth - q * (kPi / 2.0);
        if (az < -kPi) az += 2.0 * kPi;
        const int buckets = model.config().classes;
        const int label = std::clamp(
            static_cast<int>((az + kPi) / (2.0 * kPi) * buckets), 0,
            buckets - 1);
        rotated = make_train_sample(latent_roll(base.pano, q), label,
                                    model.rig(), az);
        sample = &rotated;
      }
    }

    model.zero_grads();
    LossParts parts;
    try {
      parts = combined_loss(model, sched, *sample, rng);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at step " + std::to_string(step) +
                         ": " + e.what());
    }
    if (!std::isfinite(parts.total)) {
      throw NumericError("training diverged at step " + std::to_string(step));
    }
    model.sgd_step(cfg.lr);
    result.losses.push_back(parts.total);
    if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0) {
      std::printf("step %d loss %.6f (t=%d)\n", step + 1, parts.total,
                  parts.t);
      std::fflush(stdout);
    }
  }
  return result;
}

}  // namespace panoweave
