#include "panoweave/geometry.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "panoweave/errors.hpp"

namespace panoweave {

namespace {
constexpr double kPi = std::numbers::pi;
}

SphericalCoord SphericalCoord::make(double theta, double phi) {
  if (!(theta >= -kPi && theta < kPi)) {
    throw DomainError("azimuth out of [-pi, pi): " + std::to_string(theta));
  }
  if (!(phi >= -kPi / 2 && phi <= kPi / 2)) {
    throw DomainError("elevation out of [-pi/2, pi/2]: " +
                      std::to_string(phi));
  }
  return SphericalCoord{theta, phi};
}

ErpGrid ErpGrid::make(int height, int downsample_factor) {
  if (height <= 0 || downsample_factor <= 0) {
    throw DomainError("ERP grid height and factor must be positive");
  }
  if (height % (2 * downsample_factor) != 0) {
    throw DomainError("ERP grid height must be divisible by 2 * factor");
  }
  return ErpGrid{height, 2 * height, downsample_factor};
}

CameraIntrinsics CameraIntrinsics::make(double fov_deg, int height,
                                        int width) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) {
    throw DomainError("field of view must be in (0, 180) degrees");
  }
  if (height <= 0 || width <= 0) {
    throw DomainError("image size must be positive");
  }
  return CameraIntrinsics{fov_deg, height, width};
}

double CameraIntrinsics::tan_half_fov() const {
  return std::tan(fov_deg * kPi / 360.0);
}

double CameraIntrinsics::focal_px(int axis_len) const {
  return (axis_len / 2.0) / tan_half_fov();
}

CameraPose::CameraPose() : r_(Eigen::Matrix3d::Identity()) {
  // Identity world-to-camera would have rows x, y, z which is already the
  // forward/right/up layout for a camera looking down +x.
}

CameraPose CameraPose::from_world_to_cam(const Eigen::Matrix3d& r) {
  Eigen::Matrix3d gram = r * r.transpose();
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DomainError("pose matrix is not orthonormal");
  }
  if (r.determinant() < 0.0) {
    throw DomainError("pose matrix is a reflection");
  }
  return CameraPose(r);
}

CameraPose CameraPose::look_at(const Eigen::Vector3d& forward) {
  double len = forward.norm();
  if (!(len > 0.0) || !forward.allFinite()) {
    throw DomainError("look_at direction must be nonzero and finite");
  }
  Eigen::Vector3d f = forward / len;
  Eigen::Vector3d up_ref = Eigen::Vector3d::UnitZ();
  if (std::abs(f.z()) > 0.999) up_ref = Eigen::Vector3d::UnitX();
  Eigen::Vector3d u = up_ref - up_ref.dot(f) * f;
  u.normalize();
  Eigen::Vector3d r = u.cross(f);
  Eigen::Matrix3d m;
  m.row(0) = f;
  m.row(1) = r;
  m.row(2) = u;
  return CameraPose(m);
}

CameraPose CameraPose::yaw(double angle) {
  return look_at({std::cos(angle), std::sin(angle), 0.0});
}

CameraPose CameraPose::yawed(double angle) const {
  // New camera axes are Rz(angle) times the old ones, so the new
  // world-to-camera matrix picks up Rz(angle)^T on the right.
  Eigen::Matrix3d rz;
  double c = std::cos(angle), s = std::sin(angle);
  rz << c, -s, 0, s, c, 0, 0, 0, 1;
  return CameraPose(r_ * rz.transpose());
}

CameraRig CameraRig::yawed(double angle) const {
  CameraRig out;
  out.intrinsics = intrinsics;
  out.poses.reserve(poses.size());
  for (const CameraPose& p : poses) out.poses.push_back(p.yawed(angle));
  return out;
}

CameraRig CameraRig::with_image_size(int size) const {
  CameraRig out = *this;
  out.intrinsics = CameraIntrinsics::make(intrinsics.fov_deg, size, size);
  return out;
}

SphericalCoord sph_from_erp_pixel(const ErpGrid& grid, double u, double v) {
  if (!(u >= 0.0 && u < grid.width) || !(v >= 0.0 && v <= grid.height)) {
    throw DomainError("ERP position out of bounds");
  }
  double theta = 2.0 * kPi * u / grid.width - kPi;
  double phi = kPi * v / grid.height - kPi / 2.0;
  // Guard the open/closed interval edges against rounding.
  if (theta >= kPi) theta = std::nextafter(kPi, 0.0);
  if (phi > kPi / 2) phi = kPi / 2;
  return SphericalCoord{theta, phi};
}

std::pair<double, double> erp_pixel_from_sph(const ErpGrid& grid,
                                             const SphericalCoord& c) {
  double u = grid.width * (c.theta + kPi) / (2.0 * kPi);
  double v = grid.height * (c.phi + kPi / 2.0) / kPi;
  if (u >= grid.width) u -= grid.width;
  return {u, v};
}

Eigen::Vector3d unit_from_sph(const SphericalCoord& c) {
  double cp = std::cos(c.phi);
  return {cp * std::cos(c.theta), cp * std::sin(c.theta), std::sin(c.phi)};
}

SphericalCoord sph_from_unit(const Eigen::Vector3d& v) {
  if (!v.allFinite() || !(v.norm() > 0.0)) {
    throw DomainError("direction must be nonzero and finite");
  }
  double hyp = std::hypot(v.x(), v.y());
  // atan2(0, 0) is defined as 0 here: poles get azimuth 0.
  double theta = (hyp == 0.0 && v.y() == 0.0) ? 0.0 : std::atan2(v.y(), v.x());
  if (theta >= kPi) theta = -kPi;
  double phi = std::atan2(v.z(), hyp);
  return SphericalCoord{theta, phi};
}

Eigen::Vector3d ray_from_persp_pixel(const CameraIntrinsics& intr,
                                     const CameraPose& pose, double px,
                                     double py) {
  if (!(px >= 0.0 && px <= intr.width && py >= 0.0 && py <= intr.height)) {
    throw DomainError("perspective position out of bounds");
  }
  double x_ndc = (px - intr.width / 2.0) / intr.focal_px(intr.width);
  double y_ndc = (py - intr.height / 2.0) / intr.focal_px(intr.height);
  Eigen::Vector3d cam(1.0, x_ndc, y_ndc);
  Eigen::Vector3d world = pose.cam_to_world() * cam;
  return world.normalized();
}

std::pair<double, double> erp_pixel_from_ray(const ErpGrid& grid,
                                             const Eigen::Vector3d& dir) {
  if (!dir.allFinite() || !(dir.norm() > 0.0)) {
    throw DomainError("direction must be nonzero and finite");
  }
  double hyp = std::hypot(dir.x(), dir.y());
  double theta =
      (hyp == 0.0 && dir.y() == 0.0) ? 0.0 : std::atan2(dir.y(), dir.x());
  double phi = std::atan2(dir.z(), hyp);
  double u = grid.width * (theta + kPi) / (2.0 * kPi);
  double v = grid.height * (phi + kPi / 2.0) / kPi;
  if (u >= grid.width) u -= grid.width;  // theta == pi lands on the seam
  return {u, v};
}

double wrap_u(const ErpGrid& grid, double u) {
  double w = grid.width;
  double r = std::fmod(u, w);
  if (r < 0.0) r += w;
  if (r >= w) r = 0.0;  // fmod can round up to w
  return r;
}

CameraRig icosahedron_rig(int image_size) {
  if (image_size <= 0) throw DomainError("image size must be positive");

  // Vertices: poles on +-z, two rings of five at z = +-1/sqrt(5), the lower
  // ring offset by a tenth of a turn.
  std::vector<Eigen::Vector3d> verts;
  verts.reserve(12);
  verts.emplace_back(0.0, 0.0, 1.0);
  double z = 1.0 / std::sqrt(5.0);
  double r = 2.0 / std::sqrt(5.0);
  for (int k = 0; k < 5; ++k) {
    double a = 2.0 * kPi * k / 5.0;
    verts.emplace_back(r * std::cos(a), r * std::sin(a), z);
  }
  for (int k = 0; k < 5; ++k) {
    double a = 2.0 * kPi * k / 5.0 + kPi / 5.0;
    verts.emplace_back(r * std::cos(a), r * std::sin(a), -z);
  }
  verts.emplace_back(0.0, 0.0, -1.0);

  auto top = [](int k) { return 1 + k % 5; };
  auto bot = [](int k) { return 6 + k % 5; };

  std::vector<std::array<int, 3>> faces;
  faces.reserve(20);
  for (int k = 0; k < 5; ++k) faces.push_back({0, top(k), top(k + 1)});
  for (int k = 0; k < 5; ++k) faces.push_back({top(k), bot(k), top(k + 1)});
  for (int k = 0; k < 5; ++k) faces.push_back({bot(k), top(k + 1), bot(k + 1)});
  for (int k = 0; k < 5; ++k) faces.push_back({11, bot(k), bot(k + 1)});

  CameraRig rig;
  rig.intrinsics = CameraIntrinsics::make(90.0, image_size, image_size);
  rig.poses.reserve(20);
  for (const auto& f : faces) {
    Eigen::Vector3d center = verts[f[0]] + verts[f[1]] + verts[f[2]];
    rig.poses.push_back(CameraPose::look_at(center.normalized()));
  }
  return rig;
}

Tensor coverage_count(const CameraRig& rig, const ErpGrid& grid) {
  Tensor counts(1, grid.height, grid.width);
  double tan_half = rig.intrinsics.tan_half_fov();
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      SphericalCoord c = sph_from_erp_pixel(grid, i + 0.5, j + 0.5);
      Eigen::Vector3d d = unit_from_sph(c);
      int n = 0;
      for (const CameraPose& pose : rig.poses) {
        Eigen::Vector3d cam = pose.world_to_cam() * d;
        if (cam.x() > 0.0 && std::abs(cam.y()) <= cam.x() * tan_half &&
            std::abs(cam.z()) <= cam.x() * tan_half) {
          ++n;
        }
      }
      counts.at(0, j, i) = n;
    }
  }
  return counts;
}

}  // namespace panoweave
