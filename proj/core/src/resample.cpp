#include "panoweave/resample.hpp"

#include <cmath>
#include <cstdint>

#include "panoweave/errors.hpp"
#include "panoweave/rng.hpp"

namespace panoweave {

namespace {

// Wraps an integer column index into [0, w).
inline int wrap_col(std::int64_t c, int w) {
  std::int64_t r = c % w;
  if (r < 0) r += w;
  return static_cast<int>(r);
}

inline int clamp_row(std::int64_t r, int h) {
  if (r < 0) return 0;
  if (r >= h) return h - 1;
  return static_cast<int>(r);
}

struct BilinearTaps {
  int c0, c1, r0, r1;
  double fu, fv;
};

// Footprint of a continuous ERP position: columns wrap, rows clamp.
inline BilinearTaps bilinear_taps(double u, double v, int h, int w) {
  double su = u - 0.5;
  double sv = v - 0.5;
  double cf = std::floor(su);
  double rf = std::floor(sv);
  BilinearTaps t;
  t.fu = su - cf;
  t.fv = sv - rf;
  t.c0 = wrap_col(static_cast<std::int64_t>(cf), w);
  t.c1 = wrap_col(static_cast<std::int64_t>(cf) + 1, w);
  t.r0 = clamp_row(static_cast<std::int64_t>(rf), h);
  t.r1 = clamp_row(static_cast<std::int64_t>(rf) + 1, h);
  return t;
}

// Lerp form keeps constant images exactly constant.
inline double bilinear_sample(const Tensor& src, int ch,
                              const BilinearTaps& t) {
  double a = src.at(ch, t.r0, t.c0);
  double b = src.at(ch, t.r0, t.c1);
  double c = src.at(ch, t.r1, t.c0);
  double d = src.at(ch, t.r1, t.c1);
  double top = a + t.fu * (b - a);
  double bot = c + t.fu * (d - c);
  return top + t.fv * (bot - top);
}

}  // namespace

double erp_bilinear_sample(const Tensor& src, int channel, double u,
                           double v) {
  return bilinear_sample(src, channel,
                         bilinear_taps(u, v, src.height(), src.width()));
}

PerspImage project_erp_to_persp(const ErpImage& src, const CameraPose& pose,
                                const CameraIntrinsics& intr,
                                SampleMode mode) {
  if (!src.data.all_finite()) {
    throw DataError("projection source has non-finite entries");
  }
  ErpGrid grid = src.grid();
  int h = grid.height, w = grid.width;
  Tensor out(src.data.channels(), intr.height, intr.width);
  for (int py = 0; py < intr.height; ++py) {
    for (int px = 0; px < intr.width; ++px) {
      Eigen::Vector3d ray =
          ray_from_persp_pixel(intr, pose, px + 0.5, py + 0.5);
      auto [u, v] = erp_pixel_from_ray(grid, ray);
      if (mode == SampleMode::kNearest) {
        int c = wrap_col(static_cast<std::int64_t>(std::floor(u)), w);
        int r = clamp_row(static_cast<std::int64_t>(std::floor(v)), h);
        for (int ch = 0; ch < out.channels(); ++ch) {
          out.at(ch, py, px) = src.data.at(ch, r, c);
        }
      } else {
        BilinearTaps taps = bilinear_taps(u, v, h, w);
        for (int ch = 0; ch < out.channels(); ++ch) {
          out.at(ch, py, px) = bilinear_sample(src.data, ch, taps);
        }
      }
    }
  }
  return PerspImage(std::move(out), pose, intr);
}

std::pair<ErpImage, Tensor> backproject_persp_to_erp(
    const std::vector<PerspImage>& views, const ErpGrid& grid) {
  int channels = views.empty() ? 1 : views.front().data.channels();
  Tensor accum(channels, grid.height, grid.width);
  Tensor weight(1, grid.height, grid.width);

  for (const PerspImage& view : views) {
    if (view.data.channels() != channels) {
      throw ShapeError("backprojection views disagree on channel count");
    }
    if (!view.data.all_finite()) {
      throw DataError("backprojection view has non-finite entries");
    }
    const CameraIntrinsics& intr = view.intrinsics;
    for (int py = 0; py < intr.height; ++py) {
      for (int px = 0; px < intr.width; ++px) {
        Eigen::Vector3d ray =
            ray_from_persp_pixel(intr, view.pose, px + 0.5, py + 0.5);
        auto [u, v] = erp_pixel_from_ray(grid, ray);
        BilinearTaps t = bilinear_taps(u, v, grid.height, grid.width);
        double w00 = (1.0 - t.fu) * (1.0 - t.fv);
        double w10 = t.fu * (1.0 - t.fv);
        double w01 = (1.0 - t.fu) * t.fv;
        double w11 = t.fu * t.fv;
        weight.at(0, t.r0, t.c0) += w00;
        weight.at(0, t.r0, t.c1) += w10;
        weight.at(0, t.r1, t.c0) += w01;
        weight.at(0, t.r1, t.c1) += w11;
        for (int ch = 0; ch < channels; ++ch) {
          double val = view.data.at(ch, py, px);
          accum.at(ch, t.r0, t.c0) += w00 * val;
          accum.at(ch, t.r0, t.c1) += w10 * val;
          accum.at(ch, t.r1, t.c0) += w01 * val;
          accum.at(ch, t.r1, t.c1) += w11 * val;
        }
      }
    }
  }

  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      double w = weight.at(0, j, i);
      if (w > 0.0) {
        for (int ch = 0; ch < channels; ++ch) accum.at(ch, j, i) /= w;
      }
    }
  }
  return {ErpImage(std::move(accum)), std::move(weight)};
}

Tensor circular_pad(const Tensor& x, int k) {
  if (k < 0 || k > x.width()) {
    throw DomainError("circular_pad amount must be in [0, W]");
  }
  Tensor out(x.channels(), x.height(), x.width() + 2 * k);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < x.height(); ++y) {
      for (int xo = 0; xo < out.width(); ++xo) {
        out.at(c, y, xo) = x.at(c, y, wrap_col(xo - k, x.width()));
      }
    }
  }
  return out;
}

Tensor circular_crop(const Tensor& x, int k) {
  if (k < 0 || 2 * k >= x.width()) {
    throw DomainError("circular_crop amount must leave a positive width");
  }
  Tensor out(x.channels(), x.height(), x.width() - 2 * k);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < x.height(); ++y) {
      for (int xo = 0; xo < out.width(); ++xo) {
        out.at(c, y, xo) = x.at(c, y, xo + k);
      }
    }
  }
  return out;
}

ErpImage latent_roll(const ErpImage& z, int quarter_turns) {
  int w = z.data.width();
  if (w % 4 != 0) {
    throw DomainError("latent_roll needs a width divisible by 4");
  }
  int shift = wrap_col(static_cast<std::int64_t>(quarter_turns) * (w / 4), w);
  Tensor out(z.data.channels(), z.data.height(), w);
  for (int c = 0; c < z.data.channels(); ++c) {
    for (int y = 0; y < z.data.height(); ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(c, y, x) = z.data.at(c, y, (x + shift) % w);
      }
    }
  }
  return ErpImage(std::move(out));
}

JointNoise joint_noise_init(const ErpGrid& grid, const CameraRig& rig,
                            std::uint64_t seed, int channels) {
  Rng rng(seed);
  return joint_noise_draw(grid, rig, rng, channels);
}

JointNoise joint_noise_draw(const ErpGrid& grid, const CameraRig& rig,
                            Rng& rng, int channels) {
  if (channels <= 0) throw DomainError("noise channel count must be positive");
  JointNoise out;
  out.pano = Tensor(channels, grid.latent_height(), grid.latent_width());
  rng.fill_normal(out.pano);

  ErpImage pano_img(out.pano);
  CameraIntrinsics view_intr = CameraIntrinsics::make(
      rig.intrinsics.fov_deg, grid.view_size(), grid.view_size());
  out.views.reserve(rig.poses.size());
  for (const CameraPose& pose : rig.poses) {
    out.views.push_back(project_erp_to_persp(pano_img, pose, view_intr,
                                             SampleMode::kNearest));
  }
  return out;
}

}  // namespace panoweave
