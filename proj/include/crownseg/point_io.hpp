#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace crownseg
{
// ASCII point cloud: "x y z [class]" per line, whitespace or comma separated,
// '#' comment lines. Class 2 is ground (LAS convention); any other integer is
// non-ground; a missing class is unknown.

namespace detail
{
inline bool is_sep(char c)
{
  return c == ' ' || c == '\t' || c == ',' || c == '\r';
}

/// Splits on separators; returns the number of fields written to out.
inline size_t split_fields(std::string_view line, std::string_view *out, size_t max_fields)
{
  size_t n = 0, i = 0;
  while (i < line.size() && n < max_fields + 1)
  {
    while (i < line.size() && is_sep(line[i]))
      ++i;
    if (i >= line.size())
      break;
    size_t j = i;
    while (j < line.size() && !is_sep(line[j]))
      ++j;
    if (n < max_fields)
      out[n] = line.substr(i, j - i);
    ++n;
    i = j;
  }
  return n;
}

inline bool parse_double(std::string_view s, double &v)
{
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}
}  // namespace detail

inline std::vector<Point3> read_points(std::istream &in)
{
  std::vector<Point3> points;
  std::string line;
  size_t line_no = 0;
  std::string_view fields[4];
  while (std::getline(in, line))
  {
    ++line_no;
    std::string_view sv(line);
    size_t first = sv.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || sv[first] == '#')
      continue;
    const size_t n = detail::split_fields(sv, fields, 4);
    if (n < 3 || n > 4)
      throw IoError("point file line " + std::to_string(line_no) + ": expected 3 or 4 fields");
    Point3 p;
    if (!detail::parse_double(fields[0], p.x) || !detail::parse_double(fields[1], p.y) ||
        !detail::parse_double(fields[2], p.z) || !std::isfinite(p.x) || !std::isfinite(p.y) ||
        !std::isfinite(p.z))
      throw IoError("point file line " + std::to_string(line_no) + ": bad coordinate");
    if (n == 4)
    {
      double cls = 0.0;
      if (!detail::parse_double(fields[3], cls) || cls != std::floor(cls))
        throw IoError("point file line " + std::to_string(line_no) + ": bad class");
      p.cls = cls == 2.0 ? PointClass::ground : PointClass::nonground;
    }
    points.push_back(p);
  }
  return points;
}

inline std::vector<Point3> read_points(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  return read_points(in);
}

inline void write_points(std::ostream &out, std::span<const Point3> points)
{
  char buf[128];
  for (const auto &p : points)
  {
    int len = 0;
    if (p.cls == PointClass::unknown)
      len = std::snprintf(buf, sizeof buf, "%.3f %.3f %.3f\n", p.x, p.y, p.z);
    else
      len = std::snprintf(buf, sizeof buf, "%.3f %.3f %.3f %d\n", p.x, p.y, p.z,
                          p.cls == PointClass::ground ? 2 : 1);
    out.write(buf, len);
  }
}

inline void write_points(const std::string &path, std::span<const Point3> points)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path + " for writing");
  write_points(out, points);
  if (!out)
    throw IoError("failed writing " + path);
}
}  // namespace crownseg
