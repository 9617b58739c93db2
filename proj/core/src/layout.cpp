#include "panoweave/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "panoweave/errors.hpp"

namespace panoweave {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double signed_area(const Polygon& poly) {
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross2(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                const Eigen::Vector2d& p) {
  if (std::abs(cross2(b - a, p - a)) > 1e-12) return false;
  return p.x() >= std::min(a.x(), b.x()) - 1e-12 &&
         p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
         p.y() >= std::min(a.y(), b.y()) - 1e-12 &&
         p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

/// Proper or improper intersection of segments [a, b] and [c, d].
bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  const double d1 = cross2(d - c, a - c);
  const double d2 = cross2(d - c, b - c);
  const double d3 = cross2(b - a, c - a);
  const double d4 = cross2(b - a, d - a);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

void check_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % n];
    if ((b - a).norm() < 1e-12) {
      throw DomainError("floor polygon has a zero-length edge");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction; skip them.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) {
        throw DomainError("floor polygon is self-intersecting");
      }
    }
  }
}

Polygon ccw(Polygon poly) {
  if (signed_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
  return poly;
}

void check_polygon_arg(const Polygon& poly, const char* what) {
  if (poly.size() < 3) {
    throw DomainError(std::string(what) + ": polygon needs >= 3 vertices");
  }
  for (const auto& v : poly) {
    if (!std::isfinite(v.x()) || !std::isfinite(v.y())) {
      throw DataError(std::string(what) + ": non-finite vertex");
    }
  }
  if (polygon_area(poly) <= 0.0) {
    throw DomainError(std::string(what) + ": polygon has zero area");
  }
}

struct BBox {
  double xmin, xmax, ymin, ymax;
};

BBox bbox_of(const Polygon& a, const Polygon& b) {
  BBox box{std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};
  for (const Polygon* p : {&a, &b}) {
    for (const auto& v : *p) {
      box.xmin = std::min(box.xmin, v.x());
      box.xmax = std::max(box.xmax, v.x());
      box.ymin = std::min(box.ymin, v.y());
      box.ymax = std::max(box.ymax, v.y());
    }
  }
  return box;
}

}  // namespace

RoomLayout RoomLayout::make(Polygon floor, double camera_height,
                            double ceiling_height) {
  RoomLayout room;
  room.floor = std::move(floor);
  room.camera_height = camera_height;
  room.ceiling_height = ceiling_height;

  check_polygon_arg(room.floor, "room floor");
  if (std::abs(signed_area(room.floor)) < 1e-12) {
    throw DomainError("floor polygon is degenerate");
  }
  room.floor = ccw(std::move(room.floor));
  check_simple(room.floor);
  if (!point_in_polygon(room.floor, Eigen::Vector2d::Zero())) {
    throw DomainError("camera origin must lie inside the floor polygon");
  }
  if (!(camera_height > 0.0) || !(ceiling_height > camera_height)) {
    throw DomainError("need 0 < camera_height < ceiling_height");
  }
  return room;
}

RoomLayout RoomLayout::box(double size_x, double size_y, double camera_height,
                           double ceiling_height) {
  if (!(size_x > 0.0) || !(size_y > 0.0)) {
    throw DomainError("box sides must be positive");
  }
  const double hx = size_x / 2.0;
  const double hy = size_y / 2.0;
  Polygon floor = {{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
  return make(std::move(floor), camera_height, ceiling_height);
}

RoomLayout RoomLayout::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("layout JSON parse failed: ") + e.what());
  }
  try {
    Polygon floor;
    for (const auto& v : j.at("floor")) {
      if (!v.is_array() || v.size() != 2) {
        throw FormatError("layout JSON: floor vertices must be [x, y] pairs");
      }
      floor.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    const double cam = j.at("camera_height").get<double>();
    const double ceil = j.at("ceiling_height").get<double>();
    return make(std::move(floor), cam, ceil);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("layout JSON is missing fields: ") +
                      e.what());
  }
}

std::string RoomLayout::to_json() const {
  nlohmann::json j;
  j["floor"] = nlohmann::json::array();
  for (const auto& v : floor) {
    j["floor"].push_back({v.x(), v.y()});
  }
  j["camera_height"] = camera_height;
  j["ceiling_height"] = ceiling_height;
  return j.dump(2);
}

double RoomLayout::floor_area() const { return polygon_area(floor); }

double polygon_area(const Polygon& poly) {
  if (poly.size() < 3) return 0.0;
  return std::abs(signed_area(poly));
}

bool point_in_polygon(const Polygon& poly, const Eigen::Vector2d& p) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(poly[i], poly[(i + 1) % n], p)) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_at =
          (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_at) inside = !inside;
    }
  }
  return inside;
}

bool polygon_is_convex(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d e1 = poly[(i + 1) % n] - poly[i];
    const Eigen::Vector2d e2 = poly[(i + 2) % n] - poly[(i + 1) % n];
    const double c = cross2(e1, e2);
    if (c == 0.0) continue;
    const int s = c > 0.0 ? 1 : -1;
    if (sign == 0) {
      sign = s;
    } else if (s != sign) {
      return false;
    }
  }
  return true;
}

Polygon clip_polygon(const Polygon& subject, const Polygon& convex_clip) {
  if (!polygon_is_convex(convex_clip)) {
    throw DomainError("clip polygon must be convex");
  }
  const Polygon clip = ccw(convex_clip);
  Polygon output = ccw(subject);
  const std::size_t m = clip.size();
  for (std::size_t i = 0; i < m && !output.empty(); ++i) {
    const Eigen::Vector2d a = clip[i];
    const Eigen::Vector2d b = clip[(i + 1) % m];
    const Eigen::Vector2d edge = b - a;
    Polygon input;
    input.swap(output);
    const std::size_t k = input.size();
    for (std::size_t j = 0; j < k; ++j) {
      const Eigen::Vector2d& cur = input[j];
      const Eigen::Vector2d& nxt = input[(j + 1) % k];
      const bool cur_in = cross2(edge, cur - a) >= 0.0;
      const bool nxt_in = cross2(edge, nxt - a) >= 0.0;
      if (cur_in) output.push_back(cur);
      if (cur_in != nxt_in) {
        const double denom = cross2(edge, nxt - cur);
        if (denom != 0.0) {
          const double t = cross2(edge, a - cur) / denom;
          output.push_back(cur + t * (nxt - cur));
        }
      }
    }
  }
  return output;
}

double intersection_area(const Polygon& a, const Polygon& b) {
  check_polygon_arg(a, "iou");
  check_polygon_arg(b, "iou");
  if (polygon_is_convex(b)) return std::abs(signed_area(clip_polygon(a, b)));
  if (polygon_is_convex(a)) return std::abs(signed_area(clip_polygon(b, a)));
  return intersection_area_raster(a, b);
}

double intersection_area_raster(const Polygon& a, const Polygon& b,
                                double cell) {
  check_polygon_arg(a, "iou");
  check_polygon_arg(b, "iou");
  if (!(cell > 0.0)) throw DomainError("raster cell size must be positive");
  const BBox box = bbox_of(a, b);
  const int nx = static_cast<int>(std::ceil((box.xmax - box.xmin) / cell));
  const int ny = static_cast<int>(std::ceil((box.ymax - box.ymin) / cell));
  std::int64_t hits = 0;
  for (int iy = 0; iy < ny; ++iy) {
    const double y = box.ymin + (iy + 0.5) * cell;
    for (int ix = 0; ix < nx; ++ix) {
      const Eigen::Vector2d p(box.xmin + (ix + 0.5) * cell, y);
      if (point_in_polygon(a, p) && point_in_polygon(b, p)) ++hits;
    }
  }
  return static_cast<double>(hits) * cell * cell;
}

double iou_2d(const Polygon& a, const Polygon& b) {
  const double inter = intersection_area(a, b);
  const double uni = polygon_area(a) + polygon_area(b) - inter;
  if (!(uni > 0.0)) throw DomainError("iou of zero-area polygons");
  return inter / uni;
}

double iou_2d_raster(const Polygon& a, const Polygon& b, double cell) {
  const double inter = intersection_area_raster(a, b, cell);
  const double uni = polygon_area(a) + polygon_area(b) - inter;
  if (!(uni > 0.0)) throw DomainError("iou of zero-area polygons");
  return inter / uni;
}

double iou_3d(const RoomLayout& a, const RoomLayout& b) {
  const double floor_inter = intersection_area(a.floor, b.floor);
  const double inter =
      floor_inter * std::min(a.ceiling_height, b.ceiling_height);
  const double uni = a.floor_area() * a.ceiling_height +
                     b.floor_area() * b.ceiling_height - inter;
  if (!(uni > 0.0)) throw DomainError("iou of zero-volume rooms");
  return inter / uni;
}

namespace {

double ray_hit_distance(const RoomLayout& room, const Eigen::Vector3d& dir) {
  const double floor_z = -room.camera_height;
  const double ceil_z = room.ceiling_height - room.camera_height;
  const std::size_t n = room.floor.size();
  const Eigen::Vector2d d2(dir.x(), dir.y());
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = room.floor[i];
    const Eigen::Vector2d e = room.floor[(i + 1) % n] - room.floor[i];
    const double det = cross2(d2, e);
    if (std::abs(det) < 1e-15) continue;
    const double s = cross2(a, e) / det;
    const double w = cross2(a, d2) / det;
    if (s <= 0.0 || w < 0.0 || w > 1.0) continue;
    const double z = s * dir.z();
    if (z < floor_z - 1e-12 || z > ceil_z + 1e-12) continue;
    best = std::min(best, s);
  }
  if (dir.z() < 0.0) {
    const double s = floor_z / dir.z();
    if (point_in_polygon(room.floor, s * d2)) best = std::min(best, s);
  } else if (dir.z() > 0.0) {
    const double s = ceil_z / dir.z();
    if (point_in_polygon(room.floor, s * d2)) best = std::min(best, s);
  }
  return best;
}

}  // namespace

double surface_distance(const RoomLayout& room, const Eigen::Vector3d& dir) {
  const double len = dir.norm();
  if (!(len > 0.0) || !dir.allFinite()) {
    throw DomainError("surface_distance needs a nonzero finite direction");
  }
  const double best = ray_hit_distance(room, dir / len);
  if (!std::isfinite(best)) {
    throw InternalError("distance ray escaped the room");
  }
  return best;
}

Tensor render_distance_map(const RoomLayout& room, const ErpGrid& grid,
                           bool normalized) {
  Tensor out(1, grid.height, grid.width);
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -std::numeric_limits<double>::infinity();

  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const SphericalCoord c = sph_from_erp_pixel(grid, u + 0.5, v + 0.5);
      const double best = ray_hit_distance(room, unit_from_sph(c));
      if (!std::isfinite(best)) {
        throw InternalError("distance ray escaped the room at pixel (" +
                            std::to_string(u) + ", " + std::to_string(v) +
                            ")");
      }
      out.at(0, v, u) = best;
      dmin = std::min(dmin, best);
      dmax = std::max(dmax, best);
    }
  }

  if (normalized) {
    const double span = dmax - dmin;
    if (span < 1e-15) {
      out.fill(0.0);
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 2.0 * (out[i] - dmin) / span - 1.0;
      }
    }
  }
  return out;
}

}  // namespace panoweave
