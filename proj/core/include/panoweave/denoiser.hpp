#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "panoweave/eppa.hpp"
#include "panoweave/geometry.hpp"
#include "panoweave/nn.hpp"

// Dual-branch noise predictor. One small encoder-decoder trunk is shared by
// the panorama branch (circular padding) and the perspective branch (zero
// padding, all views batched); each trunk conv gets a per-branch zero-init
// 1x1 adapter, and the two branches exchange information at five
// projection-aware attention sites. With fresh attention parameters every
// site is an exact identity, so the branches start independent and learn to
// couple.

namespace panoweave {

struct DenoiserConfig {
  ErpGrid grid;            // panorama latent geometry, height divisible by 8
  int image_channels = 3;
  int features = 32;       // trunk width, divisible by 4
  int classes = 8;
  double eppa_sigma = 1.0;
  std::uint64_t init_seed = 0;

  void validate() const;
};

struct DualPrediction {
  Tensor pano;
  Batch views;
};

/// Stage inputs retained for one branch's backward pass.
struct BranchTrace {
  Batch x, stem_out, film_s, s0, d1, e1, d2, e2, m, fm, e3, r1, up1x, r2, rh,
      s5;
};

/// One attention site's saved inputs and per-direction intermediates.
struct SiteTrace {
  Eigen::MatrixXd pano_in, views_in;
  EppaTrace pano_dir, views_dir;
};

struct DenoiserTrace {
  int t = 0;
  int y = 0;
  bool coupled = true;
  BranchTrace pano, views;
  std::array<SiteTrace, 5> sites;
};

/// Precomputed geometry for the attention sites at one feature resolution.
struct SiteGeometry {
  ErpGrid grid;
  SpeMaps spe;
  Eigen::MatrixXd mask;    // pano positions x view positions
  Eigen::MatrixXd mask_t;  // transpose, reverse direction
};

class ToyDenoiser {
 public:
  ToyDenoiser(const DenoiserConfig& cfg, const CameraRig& rig);

  const DenoiserConfig& config() const { return cfg_; }
  const CameraRig& rig() const { return rig_; }

  /// Predicts per-branch noise. Pano input is image_channels x H x 2H, views
  /// are N tensors of image_channels x H/2 x H/2. Pass a trace to enable
  /// backward; pass couple = false to skip the attention sites (independent
  /// branches). Non-finite inputs or outputs raise NumericError.
  DualPrediction forward(const Tensor& pano, const Batch& views, int t, int y,
                         DenoiserTrace* trace = nullptr,
                         bool couple = true) const;

  /// Accumulates parameter gradients for the forward pass recorded in trace.
  void backward(const DenoiserTrace& trace, const Tensor& d_pano,
                const Batch& d_views);

  std::vector<ParamRef> params();
  void zero_grads();
  void sgd_step(double lr);

  std::size_t param_count();

  /// Weight checkpointing; geometry is rebuilt from the constructor inputs,
  /// so a loaded model must be constructed with the matching config and rig.
  void save(const std::string& path);
  void load(const std::string& path);

  const SiteGeometry& half_geometry() const { return half_; }
  const SiteGeometry& quarter_geometry() const { return quarter_; }

 private:
  void apply_site(int idx, const SiteGeometry& geo, Batch& p, Batch& v,
                  DenoiserTrace& tr) const;
  void backward_site(int idx, const SiteGeometry& geo, const DenoiserTrace& tr,
                     Batch& d_p, Batch& d_v);

  DenoiserConfig cfg_;
  CameraRig rig_;

  Conv2d stem_, down1_, down2_, mid_, up1_, up2_, head_;
  // Index 0: panorama branch, 1: perspective branch.
  std::array<Conv2d, 2> stem_ad_, down1_ad_, down2_ad_, mid_ad_, up1_ad_,
      up2_ad_, head_ad_;
  Film film_stem_, film_mid_;
  std::array<EppaParams, 5> sites_;

  SiteGeometry half_, quarter_;
};

}  // namespace panoweave
