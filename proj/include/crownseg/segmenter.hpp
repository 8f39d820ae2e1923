#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "geometry.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"
#include "stats.hpp"

namespace crownseg
{
struct SegmenterConfig
{
  double max_profile_dist = 15.24;  // 50 ft
  int initial_profiles = 8;
  int max_profiles = 512;
  std::optional<double> profile_width;  // defaults to 2 * nps
  double gap_fence_k = 6.0;
  int min_gap_points = 8;
  double max_sample_spacing = 1.5;  // open canopy wider than this always ends a profile
  std::optional<double> rim_tolerance;  // hull margin still counted as crown; defaults to 2 * nps
  double mdcw = 1.5;
  double epsilon_deg = 5.0;
  double cl_cone = 0.8;
  double cl_sphere = 0.7;
  double overlap_cone = 2.0 / 3.0;
  double overlap_sphere = 1.0 / 3.0;
  double sphere_slope_deg = kSphereSlopeDeg;
  unsigned threads = 1;

  double width(double nps) const { return profile_width.value_or(2.0 * nps); }
  double rim(double nps) const { return rim_tolerance.value_or(2.0 * nps); }

  void validate() const
  {
    auto fraction = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!(max_profile_dist > 0.0))
      throw std::invalid_argument("max_profile_dist must be positive");
    if (initial_profiles < 4 || (initial_profiles & (initial_profiles - 1)) != 0)
      throw std::invalid_argument("initial_profiles must be a power of two, at least 4");
    if (max_profiles < initial_profiles)
      throw std::invalid_argument("max_profiles must be at least initial_profiles");
    if (profile_width && !(*profile_width > 0.0))
      throw std::invalid_argument("profile_width must be positive");
    if (!(gap_fence_k >= 0.0))
      throw std::invalid_argument("gap_fence_k must be non-negative");
    if (min_gap_points < 2)
      throw std::invalid_argument("min_gap_points must be at least 2");
    if (!(max_sample_spacing > 0.0))
      throw std::invalid_argument("max_sample_spacing must be positive");
    if (rim_tolerance && !(*rim_tolerance >= 0.0))
      throw std::invalid_argument("rim_tolerance must be non-negative");
    if (!(mdcw > 0.0))
      throw std::invalid_argument("mdcw must be positive");
    if (!(epsilon_deg > 0.0 && epsilon_deg < 45.0))
      throw std::invalid_argument("epsilon_deg must lie in (0, 45)");
    if (!fraction(cl_cone) || !fraction(cl_sphere) || !fraction(overlap_cone) || !fraction(overlap_sphere))
      throw std::invalid_argument("crown ratios and overlap factors must lie in (0, 1]");
    if (!(sphere_slope_deg > 0.0 && sphere_slope_deg < 90.0 - epsilon_deg))
      throw std::invalid_argument("sphere slope must lie below the cone slope");
  }
};

/// 0 marks an unassigned LSP, otherwise the owning tree id.
using LabelMap = std::vector<int32_t>;

struct Apex
{
  size_t lsp_id = 0;
  double x = 0.0;
  double y = 0.0;
  double height = 0.0;

  Vec2 xy() const { return {x, y}; }
};

struct ProfileSample
{
  double distance;  // along the ray from the apex
  double height;    // smoothed height
  size_t lsp_id;
  double offset;    // perpendicular distance from the ray
};

struct Profile
{
  double azimuth = 0.0;  // degrees, counter-clockwise from +x
  std::vector<ProfileSample> samples;
  bool truncated_at_gap = false;
};

enum class BoundaryCause
{
  gap,
  local_minimum,
  profile_end,
  apex_only
};

inline std::string_view to_string(BoundaryCause c)
{
  switch (c)
  {
  case BoundaryCause::gap: return "gap";
  case BoundaryCause::local_minimum: return "local_minimum";
  case BoundaryCause::profile_end: return "profile_end";
  case BoundaryCause::apex_only: return "apex_only";
  }
  return "?";
}

struct BoundaryDecision
{
  double azimuth = 0.0;
  double boundary_distance = 0.0;
  BoundaryCause cause = BoundaryCause::apex_only;
  size_t lsp_id = 0;
  Vec2 position;
};

struct CrownSegment
{
  int tree_id = 0;
  Apex apex;
  Polygon2 hull;
  std::vector<size_t> member_ids;  // ascending
  bool is_noise = true;
  double crown_diameter = 0.0;
  double crown_area = 0.0;
};

namespace detail
{
inline bool higher_apex(const Lsp &a, size_t ia, const Lsp &b, size_t ib)
{
  if (a.smoothed_height != b.smoothed_height)
    return a.smoothed_height > b.smoothed_height;
  if (a.x != b.x)
    return a.x < b.x;
  if (a.y != b.y)
    return a.y < b.y;
  return ia < ib;
}

inline Apex make_apex(const LspSet &lsps, size_t id)
{
  const Lsp &l = lsps[id];
  return {id, l.x, l.y, l.smoothed_height};
}

inline bool is_unassigned(std::span<const int32_t> labels, size_t id)
{
  return labels.empty() || labels[id] == 0;
}

/// Unassigned LSP ids ordered by candidate-apex priority.
inline std::vector<uint32_t> apex_order(const LspSet &lsps)
{
  std::vector<uint32_t> order(lsps.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return higher_apex(lsps[a], a, lsps[b], b);
  });
  return order;
}

/// Slopes between consecutive samples [first, last], signed outward.
inline std::vector<SlopeSample> consecutive_slopes(std::span<const ProfileSample> s, size_t first, size_t last)
{
  std::vector<SlopeSample> out;
  for (size_t i = first; i < last && i + 1 < s.size(); ++i)
    out.push_back({s[i + 1].distance - s[i].distance, s[i + 1].height - s[i].height});
  return out;
}
}  // namespace detail

/// Unassigned LSP of greatest smoothed height (ties: smaller x, then smaller y).
inline std::optional<Apex> find_gmx(const LspSet &lsps, std::span<const int32_t> labels)
{
  std::optional<size_t> best;
  for (size_t i = 0; i < lsps.size(); ++i)
  {
    if (!detail::is_unassigned(labels, i))
      continue;
    if (!best || detail::higher_apex(lsps[i], i, lsps[*best], *best))
      best = i;
  }
  if (!best)
    return std::nullopt;
  return detail::make_apex(lsps, *best);
}

namespace detail
{
/// LSPs around an apex in polar form. Points close to the apex are always
/// tested against a band; farther ones are looked up by angle.
class Neighbourhood
{
public:
  Neighbourhood(const LspSet &lsps, const Apex &apex, std::span<const uint32_t> ids, double half_width)
    : near_radius_(std::max(1.0, 4.0 * half_width))
  {
    for (uint32_t id : ids)
    {
      if (id == apex.lsp_id)
        continue;
      const double dx = lsps[id].x - apex.x, dy = lsps[id].y - apex.y;
      const double d = std::hypot(dx, dy);
      if (d <= near_radius_)
        near_.push_back(id);
      else
        far_.push_back({std::atan2(dy, dx), id});
    }
    std::sort(far_.begin(), far_.end(), [](const Polar &a, const Polar &b) {
      return a.angle != b.angle ? a.angle < b.angle : a.id < b.id;
    });
    half_angle_ = std::asin(std::min(1.0, half_width / near_radius_)) + 1e-9;
  }

  /// Calls fn(id) for a superset of the LSPs within the band along az_rad.
  template <typename Fn>
  void visit_band(double az_rad, Fn &&fn) const
  {
    constexpr double pi = std::numbers::pi;
    for (uint32_t id : near_)
      fn(id);
    const double a = std::remainder(az_rad, 2.0 * pi);
    const double lo = a - half_angle_, hi = a + half_angle_;
    if (lo < -pi)
    {
      visit_range(lo + 2.0 * pi, pi, fn);
      visit_range(-pi, hi, fn);
    }
    else if (hi > pi)
    {
      visit_range(lo, pi, fn);
      visit_range(-pi, hi - 2.0 * pi, fn);
    }
    else
      visit_range(lo, hi, fn);
  }

private:
  struct Polar
  {
    double angle;
    uint32_t id;
  };

  template <typename Fn>
  void visit_range(double lo, double hi, Fn &fn) const
  {
    auto it = std::lower_bound(far_.begin(), far_.end(), lo, [](const Polar &p, double v) { return p.angle < v; });
    for (; it != far_.end() && it->angle <= hi; ++it)
      fn(it->id);
  }

  double near_radius_;
  double half_angle_ = 0.0;
  std::vector<uint32_t> near_;
  std::vector<Polar> far_;
};

inline Profile profile_along(const LspSet &lsps, const Neighbourhood &hood, const Apex &apex, double azimuth_deg,
                             double half_width, double max_dist, std::span<const int32_t> labels)
{
  Profile prof;
  prof.azimuth = azimuth_deg;
  const double az = azimuth_deg * kDegToRad;
  const double c = std::cos(az), s = std::sin(az);
  struct Hit
  {
    ProfileSample sample;
    bool assigned;
  };
  std::vector<Hit> hits;
  hood.visit_band(az, [&](uint32_t id) {
    const Lsp &l = lsps[id];
    const double dx = l.x - apex.x, dy = l.y - apex.y;
    const double along = dx * c + dy * s;
    if (!(along > 0.0) || along > max_dist)
      return;
    const double offset = std::abs(-dx * s + dy * c);
    if (offset > half_width)
      return;
    hits.push_back({{along, l.smoothed_height, id, offset}, !is_unassigned(labels, id)});
  });
  std::sort(hits.begin(), hits.end(), [](const Hit &a, const Hit &b) {
    if (a.sample.distance != b.sample.distance)
      return a.sample.distance < b.sample.distance;
    if (a.sample.offset != b.sample.offset)
      return a.sample.offset < b.sample.offset;
    if (a.sample.height != b.sample.height)
      return a.sample.height > b.sample.height;
    return a.sample.lsp_id < b.sample.lsp_id;
  });
  prof.samples.reserve(hits.size() + 1);
  prof.samples.push_back({0.0, apex.height, apex.lsp_id, 0.0});
  for (const auto &h : hits)
  {
    // an already delineated crown ends the profile
    if (h.assigned)
      break;
    if (h.sample.distance != prof.samples.back().distance)
      prof.samples.push_back(h.sample);
  }
  return prof;
}
}  // namespace detail

/// Samples of the band of half-width profile_width/2 along one ray, nearest
/// first, stopping at the first LSP that already belongs to a crown.
inline Profile build_profile(const LspSet &lsps, const Apex &apex, double azimuth_deg, const SegmenterConfig &cfg,
                             std::span<const int32_t> labels)
{
  std::vector<uint32_t> ids(lsps.size());
  std::iota(ids.begin(), ids.end(), 0u);
  const double half = 0.5 * cfg.width(lsps.nps);
  const detail::Neighbourhood hood(lsps, apex, ids, half);
  return detail::profile_along(lsps, hood, apex, azimuth_deg, half, cfg.max_profile_dist, labels);
}

/// Index of the last sample before the first inter-tree gap, if any. Gaps are
/// square-rooted consecutive spacings beyond Q3 + k * IQR.
inline std::optional<size_t> detect_first_gap(const Profile &profile, const SegmenterConfig &cfg)
{
  const auto &s = profile.samples;
  if (s.size() < 2 || s.size() < static_cast<size_t>(cfg.min_gap_points))
    return std::nullopt;
  std::vector<double> g(s.size() - 1);
  for (size_t i = 0; i + 1 < s.size(); ++i)
    g[i] = std::sqrt(s[i + 1].distance - s[i].distance);
  std::vector<double> sorted = g;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile(sorted, 0.25), q3 = quantile(sorted, 0.75);
  // relative slack so rounding in "uniform" spacings (IQR ~ 1 ulp) never flags a gap
  const double fence = (q3 + cfg.gap_fence_k * (q3 - q1)) * (1.0 + 1e-9);
  for (size_t i = 0; i < g.size(); ++i)
    if (g[i] > fence)
      return i;
  return std::nullopt;
}

/// Index of the last sample before a spacing wider than max_sample_spacing.
/// Catches open canopy on profiles too short for the fence test.
inline std::optional<size_t> detect_open_canopy(const Profile &profile, const SegmenterConfig &cfg)
{
  const auto &s = profile.samples;
  for (size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i + 1].distance - s[i].distance > cfg.max_sample_spacing)
      return i;
  return std::nullopt;
}

/// Right-window size interpolated between a narrow cone and a sphere crown of
/// the adjacent tree, whose height is taken as the mean of apex and minimum.
inline double adjacent_window_size(double s_right_deg, double h_gmx, double h_lm, const SegmenterConfig &cfg)
{
  if (!(h_gmx > 0.0) || !(h_lm > 0.0))
    throw std::domain_error("adjacent_window_size: heights must be positive");
  const double h_ad = 0.5 * (h_gmx + h_lm);
  const double cone_slope = 90.0 - cfg.epsilon_deg;
  const double cr_cone = h_ad * cfg.cl_cone / std::tan(cone_slope * kDegToRad) * cfg.overlap_cone;
  const double cr_sphere = h_ad * cfg.cl_sphere / 2.0 * cfg.overlap_sphere;
  const double s = std::clamp(s_right_deg, cfg.sphere_slope_deg, cone_slope);
  const double t = (cone_slope - s) / (cone_slope - cfg.sphere_slope_deg);
  return cr_cone * (1.0 - t) + cr_sphere * t;
}

/// Accepts a strict local minimum as a crown boundary when the profile falls
/// towards it from the apex and rises again within the adjacent window.
inline bool classify_local_minimum(const Profile &profile, size_t lm, const SegmenterConfig &cfg)
{
  const auto &s = profile.samples;
  if (lm == 0 || lm + 1 >= s.size())
    return false;
  const double d_lm = s[lm].distance;
  const double h_gmx = s.front().height, h_lm = s[lm].height;
  if (!(h_lm > 0.0) || h_gmx < h_lm)
    return false;

  auto last_within = [&](double reach) {
    size_t j = lm;
    while (j + 1 < s.size() && s[j + 1].distance - d_lm <= reach)
      ++j;
    return j;
  };

  const auto steep = detail::consecutive_slopes(s, lm, last_within(cfg.mdcw));
  if (steep.empty())
    return false;
  const double s_right = median_abs_slope_deg(steep);
  const double w_rd = adjacent_window_size(s_right, h_gmx, h_lm, cfg);

  const auto right = detail::consecutive_slopes(s, lm, last_within(w_rd));
  const auto left = detail::consecutive_slopes(s, 0, lm);
  if (right.empty() || left.empty())
    return false;
  return median_signed_slope(left) < 0.0 && median_signed_slope(right) > 0.0;
}

inline BoundaryDecision find_boundary(const Profile &profile, const SegmenterConfig &cfg, const LspSet *lsps = nullptr)
{
  const auto &s = profile.samples;
  auto decision = [&](size_t i, BoundaryCause cause) {
    BoundaryDecision d;
    d.azimuth = profile.azimuth;
    d.boundary_distance = s[i].distance;
    d.cause = cause;
    d.lsp_id = s[i].lsp_id;
    if (lsps)
      d.position = (*lsps)[s[i].lsp_id].xy();
    else
    {
      const double a = profile.azimuth * kDegToRad;
      d.position = {s[i].distance * std::cos(a), s[i].distance * std::sin(a)};
    }
    return d;
  };
  if (s.size() <= 1)
    return decision(0, BoundaryCause::apex_only);

  auto gap = detect_first_gap(profile, cfg);
  if (const auto open = detect_open_canopy(profile, cfg); open && (!gap || *open < *gap))
    gap = open;
  const size_t last = gap ? *gap : s.size() - 1;
  Profile kept;
  const Profile *view = &profile;
  if (gap)
  {
    kept.azimuth = profile.azimuth;
    kept.samples.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(last + 1));
    kept.truncated_at_gap = true;
    view = &kept;
  }
  const auto &k = view->samples;
  for (size_t i = 1; i + 1 < k.size(); ++i)
    if (k[i - 1].height > k[i].height && k[i].height < k[i + 1].height && classify_local_minimum(*view, i, cfg))
      return decision(i, BoundaryCause::local_minimum);

  if (last == 0)
    return decision(0, gap ? BoundaryCause::gap : BoundaryCause::apex_only);
  return decision(last, gap ? BoundaryCause::gap : BoundaryCause::profile_end);
}

/// Number of profiles the doubling rule settles on for a fixed crown radius.
inline int required_profile_count(double radius, double nps, const SegmenterConfig &cfg)
{
  int n = cfg.initial_profiles;
  while (chord_height(radius, 360.0 / n) > nps && n < cfg.max_profiles)
    n *= 2;
  return n;
}

namespace detail
{
/// LSPs bucketed on a coarse grid. One copy keeps every id; the other drops
/// assigned ids lazily as it is visited.
class UnassignedIndex
{
public:
  UnassignedIndex(const LspSet &lsps, double cell) : lsps_(lsps), cell_(cell)
  {
    if (lsps.empty())
      return;
    origin_ = lsps.origin;
    double maxx = origin_.x, maxy = origin_.y;
    for (const auto &l : lsps.points)
    {
      maxx = std::max(maxx, l.x);
      maxy = std::max(maxy, l.y);
    }
    ncols_ = static_cast<int>((maxx - origin_.x) / cell_) + 1;
    nrows_ = static_cast<int>((maxy - origin_.y) / cell_) + 1;
    buckets_.resize(static_cast<size_t>(ncols_) * nrows_);
    for (size_t i = 0; i < lsps.size(); ++i)
      buckets_[bucket(col_of(lsps[i].x), row_of(lsps[i].y))].push_back(static_cast<uint32_t>(i));
    all_ = buckets_;
  }

  /// Every id within `radius` of p, assigned or not, ascending.
  std::vector<uint32_t> all_within(Vec2 p, double radius) const
  {
    std::vector<uint32_t> out;
    if (all_.empty())
      return out;
    const int c0 = col_of(p.x - radius), c1 = col_of(p.x + radius);
    const int r0 = row_of(p.y - radius), r1 = row_of(p.y + radius);
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c)
        for (uint32_t id : all_[bucket(c, r)])
        {
          const Lsp &l = lsps_[id];
          if ((l.x - p.x) * (l.x - p.x) + (l.y - p.y) * (l.y - p.y) <= radius * radius)
            out.push_back(id);
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  template <typename Fn>
  void visit_box(Vec2 lo, Vec2 hi, std::span<const int32_t> labels, Fn &&fn)
  {
    if (buckets_.empty())
      return;
    const int c0 = col_of(lo.x), c1 = col_of(hi.x), r0 = row_of(lo.y), r1 = row_of(hi.y);
    for (int r = r0; r <= r1; ++r)
    {
      for (int c = c0; c <= c1; ++c)
      {
        auto &b = buckets_[bucket(c, r)];
        std::erase_if(b, [&](uint32_t id) { return labels[id] != 0; });
        for (uint32_t id : b)
          fn(id);
      }
    }
  }

private:
  int col_of(double x) const { return std::clamp(static_cast<int>(std::floor((x - origin_.x) / cell_)), 0, ncols_ - 1); }
  int row_of(double y) const { return std::clamp(static_cast<int>(std::floor((y - origin_.y) / cell_)), 0, nrows_ - 1); }
  size_t bucket(int c, int r) const { return static_cast<size_t>(r) * ncols_ + c; }

  const LspSet &lsps_;
  double cell_;
  Vec2 origin_;
  int ncols_ = 0;
  int nrows_ = 0;
  std::vector<std::vector<uint32_t>> buckets_;
  std::vector<std::vector<uint32_t>> all_;
};

inline double fan_radius(const LspSet &lsps, const SegmenterConfig &cfg)
{
  const double half = 0.5 * cfg.width(lsps.nps);
  return std::sqrt(cfg.max_profile_dist * cfg.max_profile_dist + half * half);
}

inline std::vector<BoundaryDecision> generate_fan_from(const LspSet &lsps, std::span<const uint32_t> nearby,
                                                       const Apex &apex, const SegmenterConfig &cfg,
                                                       std::span<const int32_t> labels)
{
  const double half = 0.5 * cfg.width(lsps.nps);
  const Neighbourhood hood(lsps, apex, nearby, half);
  struct Slot
  {
    int index;  // azimuth = index * 360 / resolution
    BoundaryDecision decision;
  };
  std::vector<Slot> slots;

  auto analyse = [&](const std::vector<int> &indices, int resolution) {
    std::vector<BoundaryDecision> found(indices.size());
    const unsigned threads = nearby.size() >= 4096 ? cfg.threads : 1u;
    parallel_for(
        indices.size(), threads,
        [&](size_t k) {
          const double az = 360.0 * indices[k] / resolution;
          const Profile prof = profile_along(lsps, hood, apex, az, half, cfg.max_profile_dist, labels);
          found[k] = find_boundary(prof, cfg, &lsps);
        },
        1);
    return found;
  };

  int n = cfg.initial_profiles;
  std::vector<int> first(n);
  std::iota(first.begin(), first.end(), 0);
  auto decisions = analyse(first, n);
  for (int i = 0; i < n; ++i)
    slots.push_back({i, decisions[static_cast<size_t>(i)]});

  auto max_radius = [&] {
    double r = 0.0;
    for (const auto &s : slots)
      r = std::max(r, s.decision.boundary_distance);
    return r;
  };
  while (chord_height(max_radius(), 360.0 / n) > lsps.nps && n < cfg.max_profiles)
  {
    for (auto &s : slots)
      s.index *= 2;
    n *= 2;
    std::vector<int> fresh;
    for (int i = 1; i < n; i += 2)
      fresh.push_back(i);
    decisions = analyse(fresh, n);
    for (size_t k = 0; k < fresh.size(); ++k)
      slots.push_back({fresh[k], decisions[k]});
  }
  std::sort(slots.begin(), slots.end(), [](const Slot &a, const Slot &b) { return a.index < b.index; });
  std::vector<BoundaryDecision> out;
  out.reserve(slots.size());
  for (auto &s : slots)
    out.push_back(s.decision);
  return out;
}

inline Polygon2 boundary_hull(const Apex &apex, std::span<const BoundaryDecision> boundaries)
{
  std::vector<Vec2> pts;
  pts.reserve(boundaries.size() + 1);
  pts.push_back(apex.xy());
  for (const auto &b : boundaries)
    pts.push_back(b.position);
  return convex_hull_2d(pts);
}

/// Inside the hull, or within the rim margin the fan's chord rule leaves uncovered.
inline bool covers(const Polygon2 &hull, Vec2 p, double rim)
{
  return point_in_polygon(p, hull) || (rim > 0.0 && distance_to_boundary(p, hull) <= rim);
}

inline CrownSegment make_segment(const LspSet &lsps, const Apex &apex, Polygon2 hull, std::vector<size_t> members,
                                 const SegmenterConfig &cfg)
{
  CrownSegment seg;
  seg.apex = apex;
  if (hull.degenerate)
  {
    members = {apex.lsp_id};
    seg.crown_diameter = 0.0;
  }
  else
  {
    if (std::find(members.begin(), members.end(), apex.lsp_id) == members.end())
      members.push_back(apex.lsp_id);
    // rim members may sit just outside; re-take the hull so it holds them all
    std::vector<Vec2> pts = hull.vertices;
    bool outside = false;
    for (size_t id : members)
      if (!point_in_polygon(lsps[id].xy(), hull))
      {
        pts.push_back(lsps[id].xy());
        outside = true;
      }
    if (outside)
      hull = convex_hull_2d(pts);
    seg.crown_diameter = polygon_diameter(hull);
    seg.crown_area = hull.area();
  }
  std::sort(members.begin(), members.end());
  seg.member_ids = std::move(members);
  seg.hull = std::move(hull);
  seg.is_noise = seg.crown_diameter < cfg.mdcw;
  return seg;
}
}  // namespace detail

/// Profiles around the apex, doubled until the chord between neighbouring
/// profiles at the largest crown radius drops to the post spacing. Ordered by azimuth.
inline std::vector<BoundaryDecision> generate_fan(const LspSet &lsps, const Apex &apex, const SegmenterConfig &cfg,
                                                  std::span<const int32_t> labels)
{
  cfg.validate();
  const double reach = detail::fan_radius(lsps, cfg);
  std::vector<uint32_t> nearby;
  for (size_t i = 0; i < lsps.size(); ++i)
    if (i != apex.lsp_id && distance(lsps[i].xy(), apex.xy()) <= reach)
      nearby.push_back(static_cast<uint32_t>(i));
  return detail::generate_fan_from(lsps, nearby, apex, cfg, labels);
}

/// Hull of the boundary points (and the apex); members are the unassigned LSPs
/// inside it or within the rim tolerance of its outline.
inline CrownSegment delineate_crown(const LspSet &lsps, const Apex &apex, std::span<const BoundaryDecision> boundaries,
                                    const SegmenterConfig &cfg, std::span<const int32_t> labels)
{
  Polygon2 hull = detail::boundary_hull(apex, boundaries);
  std::vector<size_t> members;
  const double rim = cfg.rim(lsps.nps);
  if (!hull.degenerate)
    for (size_t i = 0; i < lsps.size(); ++i)
      if (detail::is_unassigned(labels, i) && detail::covers(hull, lsps[i].xy(), rim))
        members.push_back(i);
  return detail::make_segment(lsps, apex, std::move(hull), std::move(members), cfg);
}

/// Repeats apex -> fan -> crown until every LSP belongs to a segment.
inline std::vector<CrownSegment> segment_all(const LspSet &lsps, const SegmenterConfig &cfg)
{
  cfg.validate();
  std::vector<CrownSegment> segments;
  if (lsps.empty())
    return segments;

  LabelMap labels(lsps.size(), 0);
  detail::UnassignedIndex index(lsps, std::max(1.0, 5.0 * lsps.nps));
  const auto order = detail::apex_order(lsps);
  const double reach = detail::fan_radius(lsps, cfg);
  const double rim = cfg.rim(lsps.nps);
  size_t cursor = 0;

  while (true)
  {
    while (cursor < order.size() && labels[order[cursor]] != 0)
      ++cursor;
    if (cursor == order.size())
      break;
    const Apex apex = detail::make_apex(lsps, order[cursor]);

    const auto nearby = index.all_within(apex.xy(), reach);
    const auto boundaries = detail::generate_fan_from(lsps, nearby, apex, cfg, labels);

    Polygon2 hull = detail::boundary_hull(apex, boundaries);
    std::vector<size_t> members;
    if (!hull.degenerate)
    {
      Vec2 lo = hull.vertices.front(), hi = lo;
      for (const auto &v : hull.vertices)
      {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
      }
      lo = {lo.x - rim, lo.y - rim};
      hi = {hi.x + rim, hi.y + rim};
      index.visit_box(lo, hi, labels, [&](uint32_t id) {
        const Vec2 p = lsps[id].xy();
        if (p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && detail::covers(hull, p, rim))
          members.push_back(id);
      });
    }
    CrownSegment seg = detail::make_segment(lsps, apex, std::move(hull), std::move(members), cfg);
    seg.tree_id = static_cast<int>(segments.size()) + 1;
    for (size_t id : seg.member_ids)
      labels[id] = seg.tree_id;
    segments.push_back(std::move(seg));
  }
  return segments;
}

/// Per-LSP tree id derived from a segmentation.
inline LabelMap label_points(std::span<const CrownSegment> segments, size_t n)
{
  LabelMap labels(n, 0);
  for (const auto &s : segments)
    for (size_t id : s.member_ids)
      labels[id] = s.tree_id;
  return labels;
}
}  // namespace crownseg
