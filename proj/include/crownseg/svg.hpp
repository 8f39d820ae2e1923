#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>

#include "tables.hpp"

namespace crownseg
{
struct SvgOptions
{
  double width_px = 1000.0;
  double margin_px = 20.0;
  double point_radius_px = 1.2;
};

/// Top-down crown map: points coloured by tree, hull outlines, noise in grey, apex marks.
inline void render_svg(std::ostream &out, std::span<const TreeRow> trees, std::span<const PointRow> points,
                       const SvgOptions &opt = {})
{
  constexpr int kPalette = 12;
  static const char *colours[kPalette] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                          "#e377c2", "#bcbd22", "#17becf", "#393b79", "#637939", "#ad494a"};

  double minx = std::numeric_limits<double>::infinity(), miny = minx, maxx = -minx, maxy = -minx;
  auto grow = [&](double x, double y) {
    minx = std::min(minx, x);
    miny = std::min(miny, y);
    maxx = std::max(maxx, x);
    maxy = std::max(maxy, y);
  };
  for (const auto &p : points)
    grow(p.x, p.y);
  for (const auto &t : trees)
  {
    grow(t.apex_x, t.apex_y);
    for (const auto &v : t.hull)
      grow(v.x, v.y);
  }
  if (!(minx <= maxx))
  {
    minx = miny = 0.0;
    maxx = maxy = 1.0;
  }
  const double span_x = std::max(maxx - minx, 1e-6), span_y = std::max(maxy - miny, 1e-6);
  const double scale = (opt.width_px - 2.0 * opt.margin_px) / span_x;
  const double legend_px = 30.0;
  const double height_px = span_y * scale + 2.0 * opt.margin_px + legend_px;

  char buf[160];
  auto px = [&](double x) { return opt.margin_px + (x - minx) * scale; };
  auto py = [&](double y) { return legend_px + opt.margin_px + (maxy - y) * scale; };

  std::unordered_set<int> noise;
  size_t n_trees = 0;
  for (const auto &t : trees)
  {
    if (t.is_noise)
      noise.insert(t.tree_id);
    else
      ++n_trees;
  }
  auto cls = [&](int tree_id) {
    return noise.count(tree_id) || tree_id <= 0 ? std::string("noise") : "c" + std::to_string(tree_id % kPalette);
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                opt.width_px, height_px, opt.width_px, height_px);
  out << buf;
  out << "<style>\n";
  for (int i = 0; i < kPalette; ++i)
    out << ".c" << i << "{fill:" << colours[i] << ";stroke:" << colours[i] << "}\n";
  out << ".noise{fill:#9e9e9e;stroke:#9e9e9e}\n"
      << "polygon.crown{fill-opacity:0.15;stroke-width:1.5}\n"
      << "circle.pt{stroke:none}\n"
      << ".apex{fill:#000000;stroke:#ffffff;stroke-width:1}\n"
      << "text{font-family:sans-serif;font-size:14px;fill:#000000}\n"
      << "</style>\n";
  out << "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  out << "<g id=\"points\">\n";
  for (const auto &p : points)
  {
    std::snprintf(buf, sizeof buf, "<circle class=\"pt %s\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\"/>\n",
                  cls(p.tree_id).c_str(), px(p.x), py(p.y), opt.point_radius_px);
    out << buf;
  }
  out << "</g>\n<g id=\"crowns\">\n";
  for (const auto &t : trees)
  {
    if (t.hull.size() < 3)
      continue;
    out << "<polygon class=\"crown " << cls(t.tree_id) << "\" data-tree=\"" << t.tree_id << "\" points=\"";
    for (size_t i = 0; i < t.hull.size(); ++i)
    {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(t.hull[i].x), py(t.hull[i].y));
      out << buf;
    }
    out << "\"/>\n";
  }
  out << "</g>\n<g id=\"apexes\">\n";
  for (const auto &t : trees)
  {
    std::snprintf(buf, sizeof buf, "<circle class=\"apex\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.1f\"/>\n", px(t.apex_x),
                  py(t.apex_y), t.is_noise ? 1.5 : 3.0);
    out << buf;
  }
  out << "</g>\n<g id=\"legend\">\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"20\">trees: %zu  noise: %zu  points: %zu</text>\n",
                opt.margin_px, n_trees, noise.size(), points.size());
  out << buf << "</g>\n</svg>\n";
}
}  // namespace crownseg
