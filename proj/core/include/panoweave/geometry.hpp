#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "panoweave/tensor.hpp"

// Spherical and camera geometry.
//
// Conventions used throughout the library:
//   * World frame: +x points at azimuth 0 on the horizon, +y at azimuth
//     +pi/2, +z at elevation +pi/2 (straight up). Right handed.
//   * Spherical coordinates: azimuth theta in [-pi, pi), elevation phi in
//     [-pi/2, pi/2]. Unit vector (cos phi cos theta, cos phi sin theta,
//     sin phi).
//   * Equirectangular grid: width W = 2H. Continuous pixel coordinates put
//     the center of pixel (i, j) at (i + 0.5, j + 0.5). u = 0 is azimuth
//     -pi, u grows with azimuth and wraps modulo W; v = 0 is elevation
//     -pi/2 (straight down), v grows with elevation and clamps.
//   * Camera frame: x forward, y right (toward +azimuth for an identity
//     pose), z up. A CameraPose stores the world-to-camera rotation.

namespace panoweave {

/// Azimuth/elevation pair. theta in [-pi, pi), phi in [-pi/2, pi/2].
struct SphericalCoord {
  double theta = 0.0;
  double phi = 0.0;

  /// Validates the ranges; throws DomainError otherwise.
  static SphericalCoord make(double theta, double phi);
};

/// Equirectangular grid shape. Width is always twice the height, and the
/// height must be divisible by 2 * downsample_factor so that latent grids
/// and half-size perspective views stay integral.
struct ErpGrid {
  int height = 0;
  int width = 0;
  int downsample_factor = 1;

  static ErpGrid make(int height, int downsample_factor = 1);

  int latent_height() const { return height / downsample_factor; }
  int latent_width() const { return width / downsample_factor; }
  int view_size() const { return latent_height() / 2; }
};

/// Pinhole intrinsics with a full (not half) field of view per axis.
struct CameraIntrinsics {
  double fov_deg = 90.0;
  int height = 0;
  int width = 0;

  static CameraIntrinsics make(double fov_deg, int height, int width);

  double tan_half_fov() const;
  /// Focal length in pixels along the given axis length.
  double focal_px(int axis_len) const;
};

/// World-to-camera rotation. Rows of the matrix are the camera's forward,
/// right and up axes expressed in world coordinates.
class CameraPose {
 public:
  CameraPose();  // identity: forward +x, right +y, up +z

  /// Wraps an explicit world-to-camera matrix; must be a rotation
  /// (orthonormal, det +1) to within 1e-9 per entry.
  static CameraPose from_world_to_cam(const Eigen::Matrix3d& r);

  /// Camera looking along `forward` with up chosen as the projection of
  /// world +z onto the plane normal to forward (falls back to +x when
  /// forward is within ~2.5 degrees of a pole).
  static CameraPose look_at(const Eigen::Vector3d& forward);

  /// Camera on the horizon at the given azimuth.
  static CameraPose yaw(double angle);

  /// This pose rotated about world +z by `angle` (positive = toward +y).
  CameraPose yawed(double angle) const;

  const Eigen::Matrix3d& world_to_cam() const { return r_; }
  Eigen::Matrix3d cam_to_world() const { return r_.transpose(); }
  Eigen::Vector3d forward() const { return r_.row(0).transpose(); }
  Eigen::Vector3d right() const { return r_.row(1).transpose(); }
  Eigen::Vector3d up() const { return r_.row(2).transpose(); }

 private:
  explicit CameraPose(const Eigen::Matrix3d& r) : r_(r) {}
  Eigen::Matrix3d r_;
};

/// A bundle of poses sharing one set of intrinsics.
struct CameraRig {
  std::vector<CameraPose> poses;
  CameraIntrinsics intrinsics;

  CameraRig yawed(double angle) const;
  /// Same poses, different square image size.
  CameraRig with_image_size(int size) const;
};

/// Spherical coordinate of a continuous ERP position. u in [0, W), v in
/// [0, H]; anything else throws DomainError.
SphericalCoord sph_from_erp_pixel(const ErpGrid& grid, double u, double v);

/// Continuous ERP position of a spherical coordinate. Returns (u, v) with
/// u in [0, W), v in [0, H].
std::pair<double, double> erp_pixel_from_sph(const ErpGrid& grid,
                                             const SphericalCoord& c);

/// Unit vector of a spherical coordinate.
Eigen::Vector3d unit_from_sph(const SphericalCoord& c);

/// Spherical coordinate of a direction (any nonzero length). Directions
/// along +-z use azimuth 0; azimuth exactly pi maps to -pi.
SphericalCoord sph_from_unit(const Eigen::Vector3d& v);

/// World-space unit ray through a continuous perspective pixel position.
/// p must lie in [0, w] x [0, h].
Eigen::Vector3d ray_from_persp_pixel(const CameraIntrinsics& intr,
                                     const CameraPose& pose, double px,
                                     double py);

/// Continuous ERP position of a world direction: u from atan2(v_y, v_x),
/// v from the elevation, scale invariant in |v|. u in [0, W), v in [0, H].
std::pair<double, double> erp_pixel_from_ray(const ErpGrid& grid,
                                             const Eigen::Vector3d& dir);

/// Wraps a continuous u into [0, W).
double wrap_u(const ErpGrid& grid, double u);

/// 20 cameras on the face centers of a regular icosahedron oriented with
/// two vertices on +-z, square images, 90 degree field of view. Covers the
/// sphere with margin (inscribed cone 45 deg vs covering radius ~37.4 deg).
CameraRig icosahedron_rig(int image_size = 256);

/// 1 x H x W tensor counting, for each ERP pixel center, the rig frustums
/// that contain its direction (boundary inclusive).
Tensor coverage_count(const CameraRig& rig, const ErpGrid& grid);

}  // namespace panoweave
