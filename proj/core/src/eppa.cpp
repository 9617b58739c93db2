#include "panoweave/eppa.hpp"

#include <cmath>
#include <numbers>

#include "panoweave/errors.hpp"
#include "panoweave/image.hpp"
#include "panoweave/resample.hpp"

namespace panoweave {

namespace {
constexpr double kPi = std::numbers::pi;
}

SpeConfig SpeConfig::make(int channels) {
  if (channels <= 0 || channels % 4 != 0) {
    throw DomainError("SPE channel count must be a positive multiple of 4");
  }
  return SpeConfig{channels};
}

Eigen::VectorXd spe_encode(const SpeConfig& cfg, const SphericalCoord& c) {
  int L = cfg.bands();
  Eigen::VectorXd out(cfg.channels);
  double norm[2] = {c.theta / kPi, 2.0 * c.phi / kPi};
  for (int part = 0; part < 2; ++part) {
    double base = kPi * norm[part];
    for (int k = 0; k < L; ++k) {
      double arg = std::ldexp(base, k);  // 2^k * pi * normalized angle
      out(part * 2 * L + 2 * k) = std::sin(arg);
      out(part * 2 * L + 2 * k + 1) = std::cos(arg);
    }
  }
  return out;
}

SpeMaps build_spe_maps(const ErpGrid& feature_grid, const CameraRig& rig,
                       const SpeConfig& cfg) {
  int h = feature_grid.height, w = feature_grid.width;
  int c = cfg.channels;

  SpeMaps maps;
  maps.pano.resize(static_cast<Eigen::Index>(h) * w, c);
  Tensor pano_tensor(c, h, w);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      Eigen::VectorXd e =
          spe_encode(cfg, sph_from_erp_pixel(feature_grid, i + 0.5, j + 0.5));
      maps.pano.row(static_cast<Eigen::Index>(j) * w + i) = e.transpose();
      for (int ch = 0; ch < c; ++ch) pano_tensor.at(ch, j, i) = e(ch);
    }
  }

  int s = feature_grid.view_size();
  CameraIntrinsics view_intr =
      CameraIntrinsics::make(rig.intrinsics.fov_deg, s, s);
  maps.views.resize(static_cast<Eigen::Index>(rig.poses.size()) * s * s, c);
  ErpImage pano_img(pano_tensor);
  for (std::size_t n = 0; n < rig.poses.size(); ++n) {
    PerspImage view = project_erp_to_persp(pano_img, rig.poses[n], view_intr,
                                           SampleMode::kNearest);
    Eigen::Index base = static_cast<Eigen::Index>(n) * s * s;
    for (int py = 0; py < s; ++py) {
      for (int px = 0; px < s; ++px) {
        for (int ch = 0; ch < c; ++ch) {
          maps.views(base + static_cast<Eigen::Index>(py) * s + px, ch) =
              view.data.at(ch, py, px);
        }
      }
    }
  }
  return maps;
}

Eigen::MatrixXd build_attention_masks(const ErpGrid& feature_grid,
                                      const CameraRig& rig, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("mask smoothing sigma must be > 0");
  int h = feature_grid.height, w = feature_grid.width;
  int s = feature_grid.view_size();
  int n_views = static_cast<int>(rig.poses.size());
  Eigen::Index n_pano = static_cast<Eigen::Index>(h) * w;
  Eigen::Index n_src = static_cast<Eigen::Index>(n_views) * s * s;

  // 5-tap Gaussian, normalized.
  double g[5];
  double gsum = 0.0;
  for (int d = -2; d <= 2; ++d) {
    g[d + 2] = std::exp(-0.5 * d * d / (sigma * sigma));
    gsum += g[d + 2];
  }
  for (double& v : g) v /= gsum;

  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(n_pano, n_src);
  CameraIntrinsics view_intr =
      CameraIntrinsics::make(rig.intrinsics.fov_deg, s, s);

  // Each view pixel's bilinear footprint on the pano grid, scattered through
  // the separable blur around the view pixel. Equivalent to projecting every
  // one-hot pano image and blurring each view, but it touches only the
  // nonzero entries.
  for (int n = 0; n < n_views; ++n) {
    Eigen::Index view_base = static_cast<Eigen::Index>(n) * s * s;
    for (int py = 0; py < s; ++py) {
      for (int px = 0; px < s; ++px) {
        Eigen::Vector3d ray = ray_from_persp_pixel(view_intr, rig.poses[n],
                                                   px + 0.5, py + 0.5);
        auto [u, v] = erp_pixel_from_ray(feature_grid, ray);
        double su = u - 0.5, sv = v - 0.5;
        double cf = std::floor(su), rf = std::floor(sv);
        double fu = su - cf, fv = sv - rf;
        int c0 = (static_cast<int>(cf) % w + w) % w;
        int c1 = (c0 + 1) % w;
        int r0 = std::min(std::max(static_cast<int>(rf), 0), h - 1);
        int r1 = std::min(std::max(static_cast<int>(rf) + 1, 0), h - 1);
        Eigen::Index tap_idx[4] = {
            static_cast<Eigen::Index>(r0) * w + c0,
            static_cast<Eigen::Index>(r0) * w + c1,
            static_cast<Eigen::Index>(r1) * w + c0,
            static_cast<Eigen::Index>(r1) * w + c1};
        double tap_w[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv,
                           fu * fv};
        for (int t = 0; t < 4; ++t) {
          if (tap_w[t] == 0.0) continue;
          for (int dy = -2; dy <= 2; ++dy) {
            int yy = py + dy;
            if (yy < 0 || yy >= s) continue;
            double gy = g[dy + 2] * tap_w[t];
            for (int dx = -2; dx <= 2; ++dx) {
              int xx = px + dx;
              if (xx < 0 || xx >= s) continue;
              mask(tap_idx[t],
                   view_base + static_cast<Eigen::Index>(yy) * s + xx) +=
                  gy * g[dx + 2];
            }
          }
        }
      }
    }
  }

  // Per pano row: affine [0, max] -> [-1, 1]; untouched rows become -1.
  for (Eigen::Index r = 0; r < n_pano; ++r) {
    double m = mask.row(r).maxCoeff();
    if (m <= 0.0) {
      mask.row(r).setConstant(-1.0);
    } else {
      // (v/m)*2-1 so the row maximum lands on +1 exactly.
      mask.row(r) = (((mask.row(r) / m) * 2.0).array() - 1.0).matrix();
    }
  }
  return mask;
}

EppaParams EppaParams::make(int channels) {
  if (channels <= 0) throw DomainError("EPPA channel count must be positive");
  EppaParams p;
  p.channels = channels;
  p.wq = Eigen::MatrixXd::Zero(channels, channels);
  p.wk = Eigen::MatrixXd::Zero(channels, channels);
  p.wv = Eigen::MatrixXd::Zero(channels, channels);
  p.wo = Eigen::MatrixXd::Zero(channels, channels);
  p.wq_grad = p.wq;
  p.wk_grad = p.wk;
  p.wv_grad = p.wv;
  p.wo_grad = p.wo;
  return p;
}

void EppaParams::init(Rng& rng) {
  double std = 1.0 / std::sqrt(static_cast<double>(channels));
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.normal();
  };
  fill(wq);
  fill(wk);
  fill(wv);
  wo.setZero();  // the residual path starts closed
}

void EppaParams::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) {
  auto push = [&](const char* name, Eigen::MatrixXd& m, Eigen::MatrixXd& gm) {
    out.push_back({prefix + "." + name, m.data(), gm.data(),
                   static_cast<std::size_t>(m.size())});
  };
  push("wq", wq, wq_grad);
  push("wk", wk, wk_grad);
  push("wv", wv, wv_grad);
  push("wo", wo, wo_grad);
}

Eigen::MatrixXd eppa_apply(const EppaParams& params,
                           const Eigen::MatrixXd& target,
                           const Eigen::MatrixXd& source,
                           const Eigen::MatrixXd& spe_target,
                           const Eigen::MatrixXd& spe_source,
                           const Eigen::MatrixXd& mask, EppaTrace* trace) {
  int c = params.channels;
  if (target.cols() != c || source.cols() != c || spe_target.cols() != c ||
      spe_source.cols() != c) {
    throw ShapeError("EPPA channel mismatch");
  }
  if (spe_target.rows() != target.rows() ||
      spe_source.rows() != source.rows() || mask.rows() != target.rows() ||
      mask.cols() != source.rows()) {
    throw ShapeError("EPPA position count mismatch");
  }
  if (!target.allFinite() || !source.allFinite()) {
    throw DataError("EPPA features must be finite");
  }

  Eigen::MatrixXd q = (target + spe_target) * params.wq;
  Eigen::MatrixXd k = (source + spe_source) * params.wk;
  Eigen::MatrixXd v = source * params.wv;

  Eigen::MatrixXd attn = q * k.transpose() / std::sqrt(static_cast<double>(c));
  attn += mask;
  for (Eigen::Index r = 0; r < attn.rows(); ++r) {
    double m = attn.row(r).maxCoeff();
    attn.row(r) = (attn.row(r).array() - m).exp().matrix();
    attn.row(r) /= attn.row(r).sum();
  }

  Eigen::MatrixXd mixed = attn * v;
  Eigen::MatrixXd out = target + mixed * params.wo;
  if (trace) {
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->attn = std::move(attn);
    trace->mixed = std::move(mixed);
  }
  return out;
}

void eppa_backward(EppaParams& params, const Eigen::MatrixXd& target,
                   const Eigen::MatrixXd& source,
                   const Eigen::MatrixXd& spe_target,
                   const Eigen::MatrixXd& spe_source, const EppaTrace& trace,
                   const Eigen::MatrixXd& d_out, Eigen::MatrixXd& d_target,
                   Eigen::MatrixXd& d_source) {
  double scale = 1.0 / std::sqrt(static_cast<double>(params.channels));
  if (d_target.size() == 0) {
    d_target = Eigen::MatrixXd::Zero(target.rows(), target.cols());
  }
  if (d_source.size() == 0) {
    d_source = Eigen::MatrixXd::Zero(source.rows(), source.cols());
  }

  // out = target + mixed * wo
  d_target += d_out;
  params.wo_grad += trace.mixed.transpose() * d_out;
  Eigen::MatrixXd d_mixed = d_out * params.wo.transpose();

  // mixed = attn * v
  Eigen::MatrixXd d_attn = d_mixed * trace.v.transpose();
  Eigen::MatrixXd d_v = trace.attn.transpose() * d_mixed;

  // softmax rows: dA = P .* (dP - rowsum(dP .* P))
  Eigen::VectorXd row_dot =
      (d_attn.array() * trace.attn.array()).rowwise().sum().matrix();
  Eigen::MatrixXd centered = d_attn;
  centered.colwise() -= row_dot;
  Eigen::MatrixXd d_logits = trace.attn.cwiseProduct(centered);

  // logits = q * k^T * scale + mask
  Eigen::MatrixXd d_q = d_logits * trace.k * scale;
  Eigen::MatrixXd d_k = d_logits.transpose() * trace.q * scale;

  params.wq_grad += (target + spe_target).transpose() * d_q;
  d_target += d_q * params.wq.transpose();
  params.wk_grad += (source + spe_source).transpose() * d_k;
  d_source += d_k * params.wk.transpose();
  params.wv_grad += source.transpose() * d_v;
  d_source += d_v * params.wv.transpose();
}

}  // namespace panoweave
