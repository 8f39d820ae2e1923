#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "stats.hpp"

namespace crownseg
{
enum class PointClass
{
  unknown,
  ground,
  nonground
};

/// One LiDAR return.
struct Point3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  PointClass cls = PointClass::unknown;
};

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2 &, const Vec2 &) = default;
  friend auto operator<=>(const Vec2 &, const Vec2 &) = default;
};

inline double distance(Vec2 a, Vec2 b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// z component of (a - o) x (b - o)
inline double cross(Vec2 o, Vec2 a, Vec2 b)
{
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Counter-clockwise polygon, implicitly closed. A degenerate polygon (fewer
/// than three non-collinear vertices) keeps its distinct extreme points.
struct Polygon2
{
  std::vector<Vec2> vertices;
  bool degenerate = true;
  bool convex = false;

  double area() const
  {
    if (vertices.size() < 3)
      return 0.0;
    double twice = 0.0;
    for (size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++)
      twice += vertices[j].x * vertices[i].y - vertices[i].x * vertices[j].y;
    return 0.5 * std::abs(twice);
  }
};

/// Sagitta between two rays of length r separated by phi degrees.
inline double chord_height(double r, double phi_deg)
{
  if (!std::isfinite(r) || r < 0.0)
    throw std::domain_error("chord_height: radius must be finite and non-negative");
  if (!(phi_deg > 0.0 && phi_deg < 360.0))
    throw std::domain_error("chord_height: angle must lie in (0, 360) degrees");
  return r * (1.0 - std::cos(0.5 * phi_deg * kDegToRad));
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
inline Polygon2 convex_hull_2d(std::span<const Vec2> points)
{
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  Polygon2 hull;
  if (pts.size() < 3)
  {
    hull.vertices = std::move(pts);
    return hull;
  }

  std::vector<Vec2> chain(2 * pts.size());
  size_t k = 0;
  for (const auto &p : pts)
  {
    while (k >= 2 && cross(chain[k - 2], chain[k - 1], p) <= 0.0)
      --k;
    chain[k++] = p;
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i-- > 0;)
  {
    while (k >= lower && cross(chain[k - 2], chain[k - 1], pts[i]) <= 0.0)
      --k;
    chain[k++] = pts[i];
  }
  chain.resize(k - 1);

  if (chain.size() < 3)
  {
    // all collinear: keep the two extremes
    hull.vertices = {pts.front(), pts.back()};
    return hull;
  }
  hull.vertices = std::move(chain);
  hull.degenerate = false;
  hull.convex = true;
  return hull;
}

namespace detail
{
inline double boundary_tolerance(const Polygon2 &poly)
{
  double scale = 1.0;
  for (const auto &v : poly.vertices)
    scale = std::max({scale, std::abs(v.x), std::abs(v.y)});
  return 1e-9 * scale;
}

inline bool on_segment(Vec2 p, Vec2 a, Vec2 b, double tol)
{
  const double len = distance(a, b);
  if (len == 0.0)
    return distance(p, a) <= tol;
  if (std::abs(cross(a, b, p)) / len > tol)
    return false;
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}
}  // namespace detail

/// Inside-or-on-boundary test.
inline bool point_in_polygon(Vec2 p, const Polygon2 &poly)
{
  if (poly.degenerate || poly.vertices.size() < 3)
    throw std::invalid_argument("point_in_polygon: degenerate polygon");
  const auto &v = poly.vertices;
  const double tol = detail::boundary_tolerance(poly);

  if (poly.convex)
  {
    for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    {
      const double len = distance(v[j], v[i]);
      if (cross(v[j], v[i], p) < -tol * std::max(len, 1.0))
        return false;
    }
    return true;
  }

  bool inside = false;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
  {
    if (detail::on_segment(p, v[j], v[i], tol))
      return true;
    if ((v[i].y > p.y) != (v[j].y > p.y))
    {
      const double x_cross = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x_cross)
        inside = !inside;
    }
  }
  return inside;
}

/// Shortest distance from p to the polygon's outline.
inline double distance_to_boundary(Vec2 p, const Polygon2 &poly)
{
  const auto &v = poly.vertices;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < v.size(); ++i)
  {
    const Vec2 a = v[i], b = v[(i + 1) % v.size()];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? ((p.x - a.x) * ex + (p.y - a.y) * ey) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(p.x - (a.x + t * ex), p.y - (a.y + t * ey)));
  }
  return best;
}

/// Largest vertex-to-vertex distance; 0 for a single vertex or none.
inline double polygon_diameter(const Polygon2 &poly)
{
  double best = 0.0;
  const auto &v = poly.vertices;
  for (size_t i = 0; i < v.size(); ++i)
    for (size_t j = i + 1; j < v.size(); ++j)
      best = std::max(best, distance(v[i], v[j]));
  return best;
}

/// Mean slope angle of a hemisphere sampled uniformly in the horizontal:
/// the integral of arcsin over [0, 1] is pi/2 - 1 radians.
inline constexpr double kSphereSlopeDeg = (std::numbers::pi / 2.0 - 1.0) * kRadToDeg;

inline constexpr double expected_sphere_slope()
{
  return kSphereSlopeDeg;
}

/// Composite Simpson estimate of the integral of arcsin over [0, 1], radians.
inline double integrate_arcsin(int panels = 20000)
{
  if (panels < 2)
    throw std::invalid_argument("integrate_arcsin: need at least 2 panels");
  if (panels % 2 == 1)
    ++panels;
  const double h = 1.0 / panels;
  double sum = std::asin(0.0) + std::asin(1.0);
  for (int i = 1; i < panels; ++i)
    sum += (i % 2 == 1 ? 4.0 : 2.0) * std::asin(i * h);
  return sum * h / 3.0;
}

/// True when the closed-form sphere slope agrees with quadrature within tol_deg.
inline bool verify_sphere_slope(double tol_deg = 1e-3, int panels = 20000)
{
  return std::abs(integrate_arcsin(panels) * kRadToDeg - expected_sphere_slope()) < tol_deg;
}
}  // namespace crownseg
