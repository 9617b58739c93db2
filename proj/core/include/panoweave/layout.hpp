#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "panoweave/geometry.hpp"
#include "panoweave/tensor.hpp"

// Room layouts as vertically extruded floor polygons, rendered to
// equirectangular distance maps from the camera position, plus the 2D/3D
// intersection-over-union used to score layout estimates.

namespace panoweave {

using Polygon = std::vector<Eigen::Vector2d>;

/// Floor polygon extruded from z = 0 to z = ceiling_height, with the camera
/// on the vertical line through the origin at camera_height. The polygon
/// must be simple, counter-clockwise, and strictly contain the origin.
struct RoomLayout {
  Polygon floor;
  double camera_height = 1.6;
  double ceiling_height = 2.6;

  static RoomLayout make(Polygon floor, double camera_height,
                         double ceiling_height);
  /// Axis-aligned box of size_x by size_y metres centred on the camera.
  static RoomLayout box(double size_x, double size_y, double camera_height,
                        double ceiling_height);

  static RoomLayout from_json(const std::string& text);
  std::string to_json() const;

  double floor_area() const;
};

/// Absolute shoelace area.
double polygon_area(const Polygon& poly);

/// Even-odd crossing test; points on the boundary count as inside.
bool point_in_polygon(const Polygon& poly, const Eigen::Vector2d& p);

bool polygon_is_convex(const Polygon& poly);

/// Clips a subject polygon against a convex clip polygon
/// (Sutherland-Hodgman). The subject may be concave: the output ring can
/// contain degenerate bridge edges, but its signed area is the area of the
/// true intersection.
Polygon clip_polygon(const Polygon& subject, const Polygon& convex_clip);

/// Exact intersection area when either polygon is convex; grid-sampled
/// estimate otherwise.
double intersection_area(const Polygon& a, const Polygon& b);

/// Intersection area estimated by counting cell centres on a square grid.
double intersection_area_raster(const Polygon& a, const Polygon& b,
                                double cell = 0.01);

double iou_2d(const Polygon& a, const Polygon& b);
double iou_2d_raster(const Polygon& a, const Polygon& b, double cell = 0.01);

/// Layouts share the floor plane, so the overlap is the floor intersection
/// extruded to the lower of the two ceilings.
double iou_3d(const RoomLayout& a, const RoomLayout& b);

/// Distance in metres from the camera to the room surface along one world
/// direction (normalised internally, so axis queries can pass unit vectors
/// directly). Zero or non-finite directions raise DomainError.
double surface_distance(const RoomLayout& room, const Eigen::Vector3d& dir);

/// Distance from the camera to the room surface through every ERP pixel
/// center, in metres as a 1 x H x W tensor. With normalized = true the map
/// is affinely rescaled per image so min maps to -1 and max to +1 (the
/// network-friendly form); a constant map becomes all zeros. A ray that
/// escapes the room raises InternalError, since validation should make that
/// impossible.
Tensor render_distance_map(const RoomLayout& room, const ErpGrid& grid,
                           bool normalized);

}  // namespace panoweave
