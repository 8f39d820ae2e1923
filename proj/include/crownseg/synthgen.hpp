#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "evaluator.hpp"
#include "geometry.hpp"

namespace crownseg
{
enum class CrownShape
{
  cone,
  sphere,
  ellipsoid
};

struct TreeModel
{
  Vec2 stem;
  double total_height = 20.0;
  CrownShape crown_shape = CrownShape::cone;
  double crown_ratio = 0.5;  // crown length / total height
  double crown_radius = 3.0;
  double lean_deg = 0.0;
  double lean_azimuth_deg = 0.0;
  CrownClass crown_class = CrownClass::codominant;

  /// Planar position of the apex; a leaning stem displaces the crown.
  Vec2 crown_center() const
  {
    const double shift = total_height * std::tan(lean_deg * kDegToRad);
    return {stem.x + shift * std::cos(lean_azimuth_deg * kDegToRad),
            stem.y + shift * std::sin(lean_azimuth_deg * kDegToRad)};
  }

  void validate() const
  {
    if (!(total_height > 0.0))
      throw std::invalid_argument("tree: total height must be positive");
    if (!(crown_ratio > 0.0 && crown_ratio <= 1.0))
      throw std::invalid_argument("tree: crown ratio must lie in (0, 1]");
    if (!(crown_radius > 0.0))
      throw std::invalid_argument("tree: crown radius must be positive");
  }
};

struct Terrain
{
  enum class Kind
  {
    flat,
    planar_slope,
    sinusoidal
  };
  Kind kind = Kind::flat;
  double base = 100.0;
  double grade_pct = 0.0;  // rise per 100 m along +x
  double amplitude = 0.0;
  double wavelength = 50.0;

  static Terrain flat(double base = 100.0) { return {Kind::flat, base}; }
  static Terrain slope(double grade_pct, double base = 100.0) { return {Kind::planar_slope, base, grade_pct}; }
  static Terrain waves(double amplitude, double wavelength, double base = 100.0)
  {
    return {Kind::sinusoidal, base, 0.0, amplitude, wavelength};
  }

  double elevation(double x, double y) const
  {
    switch (kind)
    {
    case Kind::flat: return base;
    case Kind::planar_slope: return base + grade_pct / 100.0 * x;
    case Kind::sinusoidal:
      return base + amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength) *
                        std::cos(2.0 * std::numbers::pi * y / wavelength);
    }
    return base;
  }
};

struct SceneSpec
{
  Vec2 origin{0.0, 0.0};
  Vec2 size{100.0, 100.0};
  Terrain terrain;
  std::vector<TreeModel> trees;
  double point_density = 25.0;   // leaf-on, points / m^2
  double ground_density = 1.5;   // leaf-off ground returns, points / m^2
  double noise_sigma_z = 0.05;
  uint64_t seed = 1;

  void validate() const
  {
    if (!(size.x > 0.0 && size.y > 0.0))
      throw std::invalid_argument("scene: extent must be positive");
    if (!(point_density > 0.0 && ground_density > 0.0))
      throw std::invalid_argument("scene: densities must be positive");
    if (!(noise_sigma_z >= 0.0))
      throw std::invalid_argument("scene: noise sigma must be non-negative");
    for (const auto &t : trees)
    {
      t.validate();
      const Vec2 c = t.crown_center();
      for (Vec2 p : {t.stem, c})
        if (p.x < origin.x || p.y < origin.y || p.x > origin.x + size.x || p.y > origin.y + size.y)
          throw std::invalid_argument("scene: tree outside extent");
    }
  }
};

struct Scene
{
  std::vector<Point3> points;
  std::vector<int> labels;  // per point: 1-based tree index, 0 for ground
  std::vector<StemRecord> stems;
};

/// Height of the crown surface above ground at (x, y), or none outside the crown disc.
inline std::optional<double> crown_surface_height(const TreeModel &tree, double x, double y)
{
  const Vec2 c = tree.crown_center();
  const double r = std::hypot(x - c.x, y - c.y);
  const double R = tree.crown_radius;
  if (r > R)
    return std::nullopt;
  const double H = tree.total_height;
  switch (tree.crown_shape)
  {
  case CrownShape::cone: return H - H * tree.crown_ratio * (r / R);
  case CrownShape::sphere: return H - R + std::sqrt(R * R - r * r);
  case CrownShape::ellipsoid:
  {
    const double a = 0.5 * tree.crown_ratio * H;
    const double u = r / R;
    return H - a + a * std::sqrt(std::max(0.0, 1.0 - u * u));
  }
  }
  return std::nullopt;
}

/// First-return style sampling: uniform points over the extent, kept where a
/// crown covers them and attributed to the tallest surface there.
inline Scene generate_scene(const SceneSpec &spec)
{
  spec.validate();
  Scene scene;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(spec.origin.x, spec.origin.x + spec.size.x);
  std::uniform_real_distribution<double> uy(spec.origin.y, spec.origin.y + spec.size.y);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double area = spec.size.x * spec.size.y;

  struct Disc
  {
    Vec2 lo, hi;
  };
  std::vector<Disc> discs;
  for (const auto &t : spec.trees)
  {
    const Vec2 c = t.crown_center();
    discs.push_back({{c.x - t.crown_radius, c.y - t.crown_radius}, {c.x + t.crown_radius, c.y + t.crown_radius}});
  }

  std::poisson_distribution<long long> n_canopy(spec.point_density * area);
  const long long canopy_draws = n_canopy(rng);
  for (long long k = 0; k < canopy_draws; ++k)
  {
    const double x = ux(rng), y = uy(rng);
    const double dz = spec.noise_sigma_z * noise(rng);
    int owner = 0;
    double top = 0.0;
    for (size_t t = 0; t < spec.trees.size(); ++t)
    {
      if (x < discs[t].lo.x || x > discs[t].hi.x || y < discs[t].lo.y || y > discs[t].hi.y)
        continue;
      const auto h = crown_surface_height(spec.trees[t], x, y);
      if (h && (owner == 0 || *h > top))
      {
        owner = static_cast<int>(t) + 1;
        top = *h;
      }
    }
    if (owner == 0)
      continue;
    scene.points.push_back({x, y, spec.terrain.elevation(x, y) + top + dz, PointClass::nonground});
    scene.labels.push_back(owner);
  }

  std::poisson_distribution<long long> n_ground(spec.ground_density * area);
  const long long ground_draws = n_ground(rng);
  for (long long k = 0; k < ground_draws; ++k)
  {
    const double x = ux(rng), y = uy(rng);
    const double dz = spec.noise_sigma_z * noise(rng);
    scene.points.push_back({x, y, spec.terrain.elevation(x, y) + dz, PointClass::ground});
    scene.labels.push_back(0);
  }

  for (size_t t = 0; t < spec.trees.size(); ++t)
  {
    const auto &tree = spec.trees[t];
    StemRecord s;
    s.stem_id = "S" + std::to_string(t + 1);
    s.x = tree.stem.x;
    s.y = tree.stem.y;
    s.ground_z = spec.terrain.elevation(tree.stem.x, tree.stem.y);
    s.height = tree.total_height;
    s.crown_class = tree.crown_class;
    scene.stems.push_back(s);
  }
  return scene;
}

/// Parameters for a jittered hexagonal stand layout.
struct StandParams
{
  int n_trees = 50;
  Vec2 origin{0.0, 0.0};
  Vec2 size{100.0, 100.0};
  double spacing = 14.0;        // lattice spacing, metres
  double jitter = 0.4;          // uniform jitter per axis, metres
  double min_radius = 4.6;
  double max_radius = 5.6;
  double min_height = 18.0;
  double max_height = 30.0;
  double min_crown_ratio = 0.4;
  double max_crown_ratio = 0.6;
  double min_spacing_ratio = 1.2;  // centre distance / (r_i + r_j) to the nearest neighbour
  double max_spacing_ratio = 1.6;
  uint64_t seed = 1;
};

/// Centre distance to the nearest neighbour divided by the two radii; +inf for a lone tree.
inline std::vector<double> nearest_spacing_ratios(const std::vector<TreeModel> &trees)
{
  std::vector<double> out;
  for (size_t i = 0; i < trees.size(); ++i)
  {
    double best_d = std::numeric_limits<double>::infinity(), ratio = best_d;
    for (size_t j = 0; j < trees.size(); ++j)
    {
      if (i == j)
        continue;
      const double d = distance(trees[i].crown_center(), trees[j].crown_center());
      if (d < best_d)
      {
        best_d = d;
        ratio = d / (trees[i].crown_radius + trees[j].crown_radius);
      }
    }
    out.push_back(ratio);
  }
  return out;
}

/// Stand of crowns on a jittered hex lattice whose nearest-neighbour spacing
/// ratios all fall inside [min_spacing_ratio, max_spacing_ratio]. Crown classes
/// follow relative height: >= 90% of the tallest is dominant, >= 75% co-dominant.
inline std::vector<TreeModel> layout_stand(const StandParams &p)
{
  const double row_step = p.spacing * std::sqrt(3.0) / 2.0;
  std::vector<Vec2> lattice;
  const double margin = p.max_radius + p.jitter + 0.5;
  for (int row = 0;; ++row)
  {
    const double y = p.origin.y + margin + row * row_step;
    if (y > p.origin.y + p.size.y - margin)
      break;
    for (int col = 0;; ++col)
    {
      const double x = p.origin.x + margin + (row % 2 ? 0.5 * p.spacing : 0.0) + col * p.spacing;
      if (x > p.origin.x + p.size.x - margin)
        break;
      lattice.push_back({x, y});
    }
  }
  if (static_cast<int>(lattice.size()) < p.n_trees)
    throw std::invalid_argument("layout_stand: extent too small for the requested tree count at this spacing");

  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto lerp = [&](double a, double b) { return a + (b - a) * unit(rng); };

  for (int attempt = 0; attempt < 1000; ++attempt)
  {
    std::vector<TreeModel> trees;
    for (int i = 0; i < p.n_trees; ++i)
    {
      TreeModel t;
      t.stem = {lattice[static_cast<size_t>(i)].x + lerp(-p.jitter, p.jitter),
                lattice[static_cast<size_t>(i)].y + lerp(-p.jitter, p.jitter)};
      t.crown_radius = lerp(p.min_radius, p.max_radius);
      t.total_height = lerp(p.min_height, p.max_height);
      t.crown_ratio = lerp(p.min_crown_ratio, p.max_crown_ratio);
      t.crown_shape = static_cast<CrownShape>(i % 3);
      trees.push_back(t);
    }
    const auto ratios = nearest_spacing_ratios(trees);
    bool ok = true;
    for (size_t i = 0; i < trees.size() && ok; ++i)
    {
      for (size_t j = 0; j < trees.size() && ok; ++j)
        if (i != j && distance(trees[i].stem, trees[j].stem) < p.min_spacing_ratio * (trees[i].crown_radius + trees[j].crown_radius))
          ok = false;
      if (trees.size() > 1 && ratios[i] > p.max_spacing_ratio)
        ok = false;
    }
    if (!ok)
      continue;
    double tallest = 0.0;
    for (const auto &t : trees)
      tallest = std::max(tallest, t.total_height);
    for (auto &t : trees)
      t.crown_class = t.total_height >= 0.9 * tallest    ? CrownClass::dominant
                      : t.total_height >= 0.75 * tallest ? CrownClass::codominant
                                                         : CrownClass::intermediate;
    return trees;
  }
  throw std::runtime_error("layout_stand: could not satisfy the spacing constraints");
}
}  // namespace crownseg
