#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "panoweave/geometry.hpp"
#include "panoweave/nn.hpp"

// Projection-aware cross attention between the panorama feature map and the
// stacked perspective feature maps. Feature maps are handled as matrices
// with one row per spatial position (panorama: row-major h x 2h; views: view
// index major, then row-major s x s) and one column per channel.

namespace panoweave {

/// Positional encoding width configuration; the encoding has 4L = channels
/// entries (L sin/cos bands for azimuth, then L for elevation).
struct SpeConfig {
  int channels = 0;

  static SpeConfig make(int channels);
  int bands() const { return channels / 4; }
};

/// Fourier features of a direction. Azimuth is normalized to theta/pi and
/// elevation to 2*phi/pi, both in [-1, 1], so band k has frequency 2^k over
/// the full range and every band is continuous across the seam.
Eigen::VectorXd spe_encode(const SpeConfig& cfg, const SphericalCoord& c);

/// Positional encodings for one attention site.
struct SpeMaps {
  Eigen::MatrixXd pano;   // (h*w) x c, pixel-center encodings
  Eigen::MatrixXd views;  // (N*s*s) x c, nearest-projected from pano
};

/// Pano map sampled at pixel centers; view maps are nearest projections of
/// the pano map, so corresponding positions carry bitwise-equal vectors.
SpeMaps build_spe_maps(const ErpGrid& feature_grid, const CameraRig& rig,
                       const SpeConfig& cfg);

/// Soft visibility mask from panorama positions to stacked view positions.
/// Built by splatting each view pixel's bilinear footprint onto the pano
/// grid, smoothing with a 5x5 Gaussian in view space, then rescaling each
/// pano row from [0, max] to [-1, 1]; rows never hit by any view are all
/// -1. The reverse direction uses the transpose. The view side is square
/// with size h/2 like the feature maps.
Eigen::MatrixXd build_attention_masks(const ErpGrid& feature_grid,
                                      const CameraRig& rig, double sigma);

/// One attention site's parameters, shared by both directions.
struct EppaParams {
  int channels = 0;
  Eigen::MatrixXd wq, wk, wv, wo;  // c x c, applied as X * W
  Eigen::MatrixXd wq_grad, wk_grad, wv_grad, wo_grad;

  static EppaParams make(int channels);
  /// Random Q/K/V, exactly zero output map: the site starts as an identity.
  void init(Rng& rng);
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out);
};

/// Intermediates kept for the backward pass of one direction.
struct EppaTrace {
  Eigen::MatrixXd q, k, v;
  Eigen::MatrixXd attn;  // row-stochastic weights
  Eigen::MatrixXd mixed; // attn * v
};

/// target + wo(softmax(Q Kt / sqrt(c) + mask) V). Positional encodings are
/// added to the Q and K inputs only. Rows index positions.
Eigen::MatrixXd eppa_apply(const EppaParams& params,
                           const Eigen::MatrixXd& target,
                           const Eigen::MatrixXd& source,
                           const Eigen::MatrixXd& spe_target,
                           const Eigen::MatrixXd& spe_source,
                           const Eigen::MatrixXd& mask,
                           EppaTrace* trace = nullptr);

/// Gradients of eppa_apply. Accumulates into params' *_grad members and
/// into d_target/d_source (which must be pre-sized or empty).
void eppa_backward(EppaParams& params, const Eigen::MatrixXd& target,
                   const Eigen::MatrixXd& source,
                   const Eigen::MatrixXd& spe_target,
                   const Eigen::MatrixXd& spe_source, const EppaTrace& trace,
                   const Eigen::MatrixXd& d_out, Eigen::MatrixXd& d_target,
                   Eigen::MatrixXd& d_source);

}  // namespace panoweave
