#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace crownseg
{
/// Bare-earth raster. Row 0 is the southern-most row; (col, row) cell spans
/// [origin.x + col*cell_size, origin.x + (col+1)*cell_size) in x, likewise in y.
struct DemRaster
{
  static constexpr double kNoData = -9999.0;

  Vec2 origin;
  double cell_size = 1.0;
  int ncols = 0;
  int nrows = 0;
  std::vector<double> cells;  // row-major from the bottom row

  DemRaster() = default;
  DemRaster(Vec2 origin_, double cell_size_, int ncols_, int nrows_)
    : origin(origin_), cell_size(cell_size_), ncols(ncols_), nrows(nrows_),
      cells(static_cast<size_t>(ncols_) * static_cast<size_t>(nrows_), kNoData)
  {
    if (!(cell_size_ > 0.0))
      throw std::invalid_argument("DemRaster: cell size must be positive");
    if (ncols_ <= 0 || nrows_ <= 0)
      throw std::invalid_argument("DemRaster: dimensions must be positive");
  }

  static bool is_nodata(double v) { return v == kNoData || std::isnan(v); }

  double &at(int col, int row) { return cells[static_cast<size_t>(row) * ncols + col]; }
  double at(int col, int row) const { return cells[static_cast<size_t>(row) * ncols + col]; }

  Vec2 cell_center(int col, int row) const
  {
    return {origin.x + (col + 0.5) * cell_size, origin.y + (row + 0.5) * cell_size};
  }
  double max_x() const { return origin.x + ncols * cell_size; }
  double max_y() const { return origin.y + nrows * cell_size; }
  bool contains(double x, double y) const
  {
    return x >= origin.x && x <= max_x() && y >= origin.y && y <= max_y();
  }
  size_t nodata_count() const
  {
    return static_cast<size_t>(std::count_if(cells.begin(), cells.end(), is_nodata));
  }
};

/// Rectangle of whole cells covering [min, max]; anchored at multiples of cell_size.
struct GridExtent
{
  Vec2 origin;
  int ncols = 0;
  int nrows = 0;

  static GridExtent covering(Vec2 min, Vec2 max, double cell_size)
  {
    GridExtent e;
    const double c0 = std::floor(min.x / cell_size);
    const double r0 = std::floor(min.y / cell_size);
    e.origin = {c0 * cell_size, r0 * cell_size};
    e.ncols = static_cast<int>(std::floor(max.x / cell_size) - c0) + 1;
    e.nrows = static_cast<int>(std::floor(max.y / cell_size) - r0) + 1;
    return e;
  }
};

namespace detail
{
inline int clamp_index(double v, int n)
{
  return std::clamp(static_cast<int>(std::floor(v)), 0, n - 1);
}
}  // namespace detail

/// Mean ground elevation per cell over an explicit extent. Points outside the
/// extent are ignored; cells without ground points are NODATA.
inline DemRaster rasterize_ground(std::span<const Point3> points, double cell_size,
                                  const GridExtent &extent)
{
  if (!(cell_size > 0.0))
    throw std::invalid_argument("rasterize_ground: cell size must be positive");
  DemRaster dem(extent.origin, cell_size, extent.ncols, extent.nrows);
  std::vector<double> sum(dem.cells.size(), 0.0);
  std::vector<int> count(dem.cells.size(), 0);
  size_t used = 0;
  for (const auto &p : points)
  {
    if (p.cls != PointClass::ground || !dem.contains(p.x, p.y))
      continue;
    const int col = detail::clamp_index((p.x - dem.origin.x) / cell_size, dem.ncols);
    const int row = detail::clamp_index((p.y - dem.origin.y) / cell_size, dem.nrows);
    const size_t idx = static_cast<size_t>(row) * dem.ncols + col;
    sum[idx] += p.z;
    ++count[idx];
    ++used;
  }
  if (used == 0)
    throw EmptyInputError("rasterize_ground: no ground points");
  for (size_t i = 0; i < dem.cells.size(); ++i)
    if (count[i] > 0)
      dem.cells[i] = sum[i] / count[i];
  return dem;
}

/// Mean ground elevation per cell over the bounding box of the ground points.
inline DemRaster rasterize_ground(std::span<const Point3> points, double cell_size)
{
  if (!(cell_size > 0.0))
    throw std::invalid_argument("rasterize_ground: cell size must be positive");
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  bool any = false;
  for (const auto &p : points)
  {
    if (p.cls != PointClass::ground)
      continue;
    any = true;
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  if (!any)
    throw EmptyInputError("rasterize_ground: no ground points");
  return rasterize_ground(points, cell_size, GridExtent::covering(lo, hi, cell_size));
}

struct FillResult
{
  DemRaster dem;
  int passes = 0;
};

/// Repeatedly replaces every void cell that touches known cells (8-neighbourhood)
/// with the mean of those neighbours. Each pass reads only the previous pass.
inline FillResult fill_voids(DemRaster dem)
{
  if (dem.nodata_count() == dem.cells.size())
    throw EmptyInputError("fill_voids: raster is entirely NODATA");
  FillResult result;
  std::vector<double> next = dem.cells;
  while (dem.nodata_count() > 0)
  {
    for (int row = 0; row < dem.nrows; ++row)
    {
      for (int col = 0; col < dem.ncols; ++col)
      {
        if (!DemRaster::is_nodata(dem.at(col, row)))
          continue;
        double sum = 0.0;
        int n = 0;
        for (int dr = -1; dr <= 1; ++dr)
        {
          for (int dc = -1; dc <= 1; ++dc)
          {
            const int c = col + dc, r = row + dr;
            if ((dr == 0 && dc == 0) || c < 0 || r < 0 || c >= dem.ncols || r >= dem.nrows)
              continue;
            const double v = dem.at(c, r);
            if (!DemRaster::is_nodata(v))
            {
              sum += v;
              ++n;
            }
          }
        }
        if (n > 0)
          next[static_cast<size_t>(row) * dem.ncols + col] = sum / n;
      }
    }
    dem.cells = next;
    ++result.passes;
  }
  result.dem = std::move(dem);
  return result;
}

/// Bilinear interpolation between cell centres; coordinates in the outer
/// half-cell margin clamp to the nearest centre row/column.
inline double ground_elevation_at(const DemRaster &dem, double x, double y)
{
  if (!dem.contains(x, y))
    throw ExtentError("ground_elevation_at: point outside raster extent");
  const double fx = std::clamp((x - dem.origin.x) / dem.cell_size - 0.5, 0.0, dem.ncols - 1.0);
  const double fy = std::clamp((y - dem.origin.y) / dem.cell_size - 0.5, 0.0, dem.nrows - 1.0);
  const int c0 = std::min(static_cast<int>(fx), dem.ncols - 1);
  const int r0 = std::min(static_cast<int>(fy), dem.nrows - 1);
  const int c1 = std::min(c0 + 1, dem.ncols - 1);
  const int r1 = std::min(r0 + 1, dem.nrows - 1);
  const double tx = fx - c0, ty = fy - r0;
  const double v00 = dem.at(c0, r0), v10 = dem.at(c1, r0);
  const double v01 = dem.at(c0, r1), v11 = dem.at(c1, r1);
  if (DemRaster::is_nodata(v00) || DemRaster::is_nodata(v10) || DemRaster::is_nodata(v01) ||
      DemRaster::is_nodata(v11))
    throw std::domain_error("ground_elevation_at: raster has unfilled voids");
  const double bottom = v00 + tx * (v10 - v00);
  const double top = v01 + tx * (v11 - v01);
  return bottom + ty * (top - bottom);
}
}  // namespace crownseg
