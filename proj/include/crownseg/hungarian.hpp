#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace crownseg
{
/// Dense row-major matrix of non-negative scores.
struct ScoreMatrix
{
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  ScoreMatrix(std::initializer_list<std::initializer_list<double>> init)
  {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    for (const auto &row : init)
    {
      if (row.size() != cols)
        throw std::invalid_argument("ScoreMatrix: ragged initializer");
      values.insert(values.end(), row.begin(), row.end());
    }
  }

  double &operator()(size_t r, size_t c) { return values[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return values[r * cols + c]; }
};

struct Assignment
{
  std::vector<std::pair<size_t, size_t>> pairs;  // (row, col), ascending by row
  double total = 0.0;
};

/// Maximum-weight one-to-one assignment (Kuhn-Munkres with potentials on the
/// square padding of the matrix). Zero-score pairings are dropped afterwards.
inline Assignment hungarian_max(const ScoreMatrix &m)
{
  Assignment result;
  const size_t n = std::max(m.rows, m.cols);
  if (n == 0)
    return result;
  double top = 0.0;
  for (double v : m.values)
  {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("hungarian_max: scores must be finite and non-negative");
    top = std::max(top, v);
  }
  auto cost = [&](size_t i, size_t j) {  // 1-based, padded cells score 0
    const double score = (i <= m.rows && j <= m.cols) ? m(i - 1, j - 1) : 0.0;
    return top - score;
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (size_t i = 1; i <= n; ++i)
  {
    p[0] = i;
    size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do
    {
      used[j0] = 1;
      const size_t i0 = p[j0];
      double delta = inf;
      size_t j1 = 0;
      for (size_t j = 1; j <= n; ++j)
      {
        if (used[j])
          continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j])
        {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta)
        {
          delta = minv[j];
          j1 = j;
        }
      }
      for (size_t j = 0; j <= n; ++j)
      {
        if (used[j])
        {
          u[p[j]] += delta;
          v[j] -= delta;
        }
        else
          minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do
    {
      const size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (size_t j = 1; j <= n; ++j)
  {
    const size_t i = p[j];
    if (i == 0 || i > m.rows || j > m.cols)
      continue;
    const double score = m(i - 1, j - 1);
    if (score > 0.0)
    {
      result.pairs.emplace_back(i - 1, j - 1);
      result.total += score;
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  return result;
}
}  // namespace crownseg
