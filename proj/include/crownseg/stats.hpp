#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace crownseg
{
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Median; the mean of the two central values for an even count.
inline double median(std::span<const double> values)
{
  if (values.empty())
    throw std::invalid_argument("median: empty input");
  std::vector<double> v(values.begin(), values.end());
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1)
    return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

/// Quantile of an already sorted sample, linearly interpolated between the
/// order statistics at zero-based rank q*(n-1).
inline double quantile(std::span<const double> sorted, double q)
{
  if (sorted.empty())
    throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile: q outside [0, 1]");
  const double rank = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Rise over run between two consecutive profile samples. The vertical delta
/// is signed outward from the apex: positive means rising away from it.
struct SlopeSample
{
  double horizontal_delta;
  double vertical_delta;

  double ratio() const { return vertical_delta / horizontal_delta; }
};

/// arctan of the median absolute slope, in degrees.
inline double median_abs_slope_deg(std::span<const SlopeSample> samples)
{
  if (samples.empty())
    throw std::invalid_argument("median_abs_slope_deg: no slope samples");
  std::vector<double> abs_slopes;
  abs_slopes.reserve(samples.size());
  for (const auto &s : samples)
    abs_slopes.push_back(std::abs(s.ratio()));
  return std::atan(median(abs_slopes)) * kRadToDeg;
}

/// Median of the signed rise/run ratios.
inline double median_signed_slope(std::span<const SlopeSample> samples)
{
  if (samples.empty())
    throw std::invalid_argument("median_signed_slope: no slope samples");
  std::vector<double> slopes;
  slopes.reserve(samples.size());
  for (const auto &s : samples)
    slopes.push_back(s.ratio());
  return median(slopes);
}
}  // namespace crownseg
