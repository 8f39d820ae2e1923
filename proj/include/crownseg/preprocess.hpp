#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "terrain.hpp"

namespace crownseg
{
struct PreprocessConfig
{
  double nps = 0.2;
  double min_height = 5.0;
  std::optional<double> smooth_sigma;   // defaults to nps
  std::optional<double> smooth_radius;  // defaults to 3 * nps
  unsigned threads = 1;

  double sigma() const { return smooth_sigma.value_or(nps); }
  double radius() const { return smooth_radius.value_or(3.0 * nps); }

  void validate() const
  {
    if (!(nps > 0.0) || !std::isfinite(nps))
      throw std::invalid_argument("nps must be positive");
    if (!(min_height >= 0.0))
      throw std::invalid_argument("min_height must be non-negative");
    if (!(sigma() > 0.0))
      throw std::invalid_argument("smoothing sigma must be positive");
    if (!(radius() >= sigma()))
      throw std::invalid_argument("smoothing radius must be at least sigma");
  }
};

/// LiDAR surface point: the highest return of one grid cell.
struct Lsp
{
  double x = 0.0;
  double y = 0.0;
  double elevation = 0.0;
  double height = 0.0;
  double smoothed_height = 0.0;
  int col = 0;
  int row = 0;
  size_t source_index = 0;  // index of the originating point in the input cloud

  Vec2 xy() const { return {x, y}; }
};

/// LSPs in row-major cell order; the id of an LSP is its index.
struct LspSet
{
  std::vector<Lsp> points;
  Vec2 origin;
  double nps = 0.0;
  int ncols = 0;
  int nrows = 0;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Lsp &operator[](size_t i) const { return points[i]; }
};

namespace detail
{
/// Uniform bucket grid over planar positions, used for neighbour queries.
class BucketGrid
{
public:
  BucketGrid(std::span<const Vec2> pts, double cell) : cell_(cell)
  {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-lo.x, -lo.y};
    for (const auto &p : pts)
    {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    origin_ = lo;
    ncols_ = static_cast<int>((hi.x - lo.x) / cell_) + 1;
    nrows_ = static_cast<int>((hi.y - lo.y) / cell_) + 1;
    start_.assign(static_cast<size_t>(ncols_) * nrows_ + 1, 0);
    std::vector<uint32_t> key(pts.size());
    for (size_t i = 0; i < pts.size(); ++i)
    {
      key[i] = static_cast<uint32_t>(bucket_of(pts[i]));
      ++start_[key[i] + 1];
    }
    for (size_t b = 1; b < start_.size(); ++b)
      start_[b] += start_[b - 1];
    items_.resize(pts.size());
    std::vector<uint32_t> fill(start_.begin(), start_.end() - 1);
    for (size_t i = 0; i < pts.size(); ++i)
      items_[fill[key[i]]++] = static_cast<uint32_t>(i);
  }

  int col_of(double x) const { return std::clamp(static_cast<int>((x - origin_.x) / cell_), 0, ncols_ - 1); }
  int row_of(double y) const { return std::clamp(static_cast<int>((y - origin_.y) / cell_), 0, nrows_ - 1); }
  size_t bucket_of(Vec2 p) const { return static_cast<size_t>(row_of(p.y)) * ncols_ + col_of(p.x); }
  int ncols() const { return ncols_; }
  int nrows() const { return nrows_; }
  double cell() const { return cell_; }

  std::span<const uint32_t> bucket(int col, int row) const
  {
    const size_t b = static_cast<size_t>(row) * ncols_ + col;
    return {items_.data() + start_[b], items_.data() + start_[b + 1]};
  }

private:
  double cell_;
  Vec2 origin_;
  int ncols_ = 0;
  int nrows_ = 0;
  std::vector<uint32_t> start_;
  std::vector<uint32_t> items_;
};
}  // namespace detail

/// Median 2D nearest-neighbour distance over an evenly strided sample of at
/// most max_samples points. Used when no nominal post spacing is supplied.
inline double estimate_nps(std::span<const Point3> points, size_t max_samples = 10000)
{
  if (points.size() < 2)
    throw std::invalid_argument("estimate_nps: need at least two points");
  std::vector<Vec2> xy;
  xy.reserve(points.size());
  for (const auto &p : points)
    xy.push_back({p.x, p.y});

  double w = 0.0, h = 0.0;
  {
    auto [mnx, mxx] = std::minmax_element(xy.begin(), xy.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
    auto [mny, mxy] = std::minmax_element(xy.begin(), xy.end(), [](Vec2 a, Vec2 b) { return a.y < b.y; });
    w = mxx->x - mnx->x;
    h = mxy->y - mny->y;
  }
  double cell = std::sqrt(std::max(w, 1e-9) * std::max(h, 1e-9) / static_cast<double>(xy.size())) * 2.0;
  cell = std::max({cell, w / 4096.0, h / 4096.0, 1e-9});
  detail::BucketGrid grid(xy, cell);

  const size_t n_samples = std::min(max_samples, xy.size());
  std::vector<double> nn;
  nn.reserve(n_samples);
  for (size_t s = 0; s < n_samples; ++s)
  {
    const size_t i = s * xy.size() / n_samples;
    const Vec2 p = xy[i];
    const int c = grid.col_of(p.x), r = grid.row_of(p.y);
    double best = std::numeric_limits<double>::infinity();
    auto scan = [&](int cc, int rr) {
      if (cc < 0 || rr < 0 || cc >= grid.ncols() || rr >= grid.nrows())
        return;
      for (uint32_t j : grid.bucket(cc, rr))
        if (j != i)
          best = std::min(best, distance(p, xy[j]));
    };
    for (int ring = 0;; ++ring)
    {
      // perimeter of the ring only, clamped to the grid
      const int r0 = std::max(r - ring, 0), r1 = std::min(r + ring, grid.nrows() - 1);
      for (int rr = r0; rr <= r1; ++rr)
      {
        if (std::abs(rr - r) == ring)
        {
          for (int cc = std::max(c - ring, 0); cc <= std::min(c + ring, grid.ncols() - 1); ++cc)
            scan(cc, rr);
        }
        else
        {
          scan(c - ring, rr);
          if (ring > 0)
            scan(c + ring, rr);
        }
      }
      // every unvisited bucket is at least ring*cell away
      if (best <= ring * grid.cell() ||
          (ring > grid.ncols() && ring > grid.nrows()))
        break;
    }
    nn.push_back(best);
  }
  return median(nn);
}

/// Keeps the highest point of every occupied nps cell. The grid is anchored
/// at the lower-left corner of the input bounding box. Equal elevations are
/// resolved towards the lexicographically smaller (x, y).
inline LspSet extract_lsp(std::span<const Point3> points, const PreprocessConfig &cfg)
{
  if (points.empty())
    throw EmptyInputError("extract_lsp: empty point cloud");
  cfg.validate();

  double minx = std::numeric_limits<double>::infinity(), miny = minx;
  double maxx = -minx, maxy = -minx;
  for (const auto &p : points)
  {
    minx = std::min(minx, p.x);
    miny = std::min(miny, p.y);
    maxx = std::max(maxx, p.x);
    maxy = std::max(maxy, p.y);
  }
  LspSet set;
  set.origin = {minx, miny};
  set.nps = cfg.nps;
  set.ncols = static_cast<int>(std::floor((maxx - minx) / cfg.nps)) + 1;
  set.nrows = static_cast<int>(std::floor((maxy - miny) / cfg.nps)) + 1;

  struct Entry
  {
    uint64_t key;
    uint32_t index;
  };
  std::vector<Entry> entries(points.size());
  for (size_t i = 0; i < points.size(); ++i)
  {
    const auto col = static_cast<uint64_t>(std::min(set.ncols - 1, static_cast<int>((points[i].x - minx) / cfg.nps)));
    const auto row = static_cast<uint64_t>(std::min(set.nrows - 1, static_cast<int>((points[i].y - miny) / cfg.nps)));
    entries[i] = {row * static_cast<uint64_t>(set.ncols) + col, static_cast<uint32_t>(i)};
  }
  auto better = [&](uint32_t a, uint32_t b) {
    const auto &pa = points[a], &pb = points[b];
    if (pa.z != pb.z)
      return pa.z > pb.z;
    if (pa.x != pb.x)
      return pa.x < pb.x;
    if (pa.y != pb.y)
      return pa.y < pb.y;
    return a < b;
  };
  std::sort(entries.begin(), entries.end(), [&](const Entry &a, const Entry &b) {
    return a.key != b.key ? a.key < b.key : better(a.index, b.index);
  });

  for (size_t i = 0; i < entries.size(); ++i)
  {
    if (i > 0 && entries[i].key == entries[i - 1].key)
      continue;
    const auto &p = points[entries[i].index];
    Lsp l;
    l.x = p.x;
    l.y = p.y;
    l.elevation = p.z;
    l.col = static_cast<int>(entries[i].key % static_cast<uint64_t>(set.ncols));
    l.row = static_cast<int>(entries[i].key / static_cast<uint64_t>(set.ncols));
    l.source_index = entries[i].index;
    set.points.push_back(l);
  }
  return set;
}

/// Height above the DEM; drops LSPs below cfg.min_height (the threshold itself is kept).
inline LspSet normalize_heights(const LspSet &lsps, const DemRaster &dem, const PreprocessConfig &cfg)
{
  LspSet out = lsps;
  out.points.clear();
  for (const auto &l : lsps.points)
  {
    Lsp n = l;
    n.height = l.elevation - ground_elevation_at(dem, l.x, l.y);
    n.smoothed_height = n.height;
    if (n.height >= cfg.min_height)
      out.points.push_back(n);
  }
  return out;
}

/// Gaussian-weighted mean of heights within the smoothing radius, normalised
/// over the LSPs actually present so gap edges see no phantom zeros.
inline LspSet gaussian_smooth(const LspSet &lsps, const PreprocessConfig &cfg)
{
  cfg.validate();
  LspSet out = lsps;
  if (lsps.empty())
    return out;

  const double sigma = cfg.sigma(), radius = cfg.radius();
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  const int reach = static_cast<int>(std::ceil(radius / lsps.nps)) + 1;

  std::vector<int32_t> cell_index(static_cast<size_t>(lsps.ncols) * lsps.nrows, -1);
  for (size_t i = 0; i < lsps.size(); ++i)
    cell_index[static_cast<size_t>(lsps[i].row) * lsps.ncols + lsps[i].col] = static_cast<int32_t>(i);

  parallel_for(lsps.size(), cfg.threads, [&](size_t i) {
    const Lsp &p = lsps[i];
    double wsum = 0.0, hsum = 0.0;
    const int r0 = std::max(0, p.row - reach), r1 = std::min(lsps.nrows - 1, p.row + reach);
    const int c0 = std::max(0, p.col - reach), c1 = std::min(lsps.ncols - 1, p.col + reach);
    for (int r = r0; r <= r1; ++r)
    {
      for (int c = c0; c <= c1; ++c)
      {
        const int32_t j = cell_index[static_cast<size_t>(r) * lsps.ncols + c];
        if (j < 0)
          continue;
        const Lsp &q = lsps[static_cast<size_t>(j)];
        const double dx = q.x - p.x, dy = q.y - p.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 > radius * radius)
          continue;
        const double w = std::exp(-d2 * inv_two_sigma2);
        wsum += w;
        hsum += w * q.height;
      }
    }
    out.points[i].smoothed_height = hsum / wsum;
  });
  return out;
}

/// extract_lsp -> normalize_heights -> gaussian_smooth
inline LspSet preprocess(std::span<const Point3> points, const DemRaster &dem, const PreprocessConfig &cfg)
{
  return gaussian_smooth(normalize_heights(extract_lsp(points, cfg), dem, cfg), cfg);
}
}  // namespace crownseg
