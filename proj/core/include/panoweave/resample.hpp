#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "panoweave/image.hpp"

namespace panoweave {

enum class SampleMode { kNearest, kBilinear };

/// Renders a perspective view of an ERP image by casting a ray through each
/// view pixel center and sampling the ERP grid. Bilinear sampling wraps
/// horizontally and clamps vertically; nearest takes the pixel whose center
/// is closest (ties round up, then wrap). Non-finite source data throws
/// DataError.
PerspImage project_erp_to_persp(const ErpImage& src, const CameraPose& pose,
                                const CameraIntrinsics& intr,
                                SampleMode mode);

/// Stitches perspective views back onto an ERP grid by splatting each view
/// pixel onto its four bilinear neighbours. Returns the weighted average
/// image and the 1 x H x W total weight map; pixels that received nothing
/// are zero. An empty view list yields a one-channel zero image. All views
/// must share a channel count.
std::pair<ErpImage, Tensor> backproject_persp_to_erp(
    const std::vector<PerspImage>& views, const ErpGrid& grid);

/// Bilinear sample of one channel at a continuous pixel position (u, v),
/// wrapping columns and clamping rows like every other ERP sampler here.
/// The lerp form keeps constant images exactly constant.
double erp_bilinear_sample(const Tensor& src, int channel, double u, double v);

/// Appends k columns of horizontal wrap-around context on each side.
/// k must be in [0, W].
Tensor circular_pad(const Tensor& x, int k);

/// Drops k columns on each side; inverse of circular_pad.
Tensor circular_crop(const Tensor& x, int k);

/// Rolls an ERP latent by quarter turns about the vertical axis. Positive t
/// moves content toward lower column indices, which matches yawing every
/// camera by +t * pi/2. Width must be divisible by 4.
ErpImage latent_roll(const ErpImage& z, int quarter_turns);

/// Panorama noise with the per-view noises that share it.
struct JointNoise {
  Tensor pano;                    // channels x H/f x W/f
  std::vector<PerspImage> views;  // channels x H/2f x H/2f each
};

/// Draws i.i.d. standard normal panorama noise at the grid's latent
/// resolution and projects it to every rig pose with nearest sampling, so
/// overlapping views agree with the panorama values exactly.
JointNoise joint_noise_init(const ErpGrid& grid, const CameraRig& rig,
                            std::uint64_t seed, int channels = 4);

class Rng;

/// Same construction, drawing from a caller-owned stream.
JointNoise joint_noise_draw(const ErpGrid& grid, const CameraRig& rig,
                            Rng& rng, int channels = 4);

}  // namespace panoweave
