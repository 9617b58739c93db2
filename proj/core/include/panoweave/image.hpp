#pragma once

#include "panoweave/geometry.hpp"
#include "panoweave/tensor.hpp"

namespace panoweave {

/// Equirectangular image or latent: C x H x 2H tensor. The constructor
/// checks the aspect ratio; value range conventions (RGB in [0, 1], latents
/// unconstrained) are up to the caller.
struct ErpImage {
  Tensor data;

  ErpImage() = default;
  explicit ErpImage(Tensor t);

  ErpGrid grid() const { return ErpGrid::make(data.height()); }
};

/// Perspective image together with the pose and intrinsics that produced
/// it. Keeping the camera attached is what lets backprojection and overlap
/// metrics work on a plain list of views.
struct PerspImage {
  Tensor data;
  CameraPose pose;
  CameraIntrinsics intrinsics;

  PerspImage() = default;
  PerspImage(Tensor t, const CameraPose& p, const CameraIntrinsics& intr);
};

}  // namespace panoweave
