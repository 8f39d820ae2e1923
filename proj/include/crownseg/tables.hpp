#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "evaluator.hpp"
#include "geometry.hpp"
#include "preprocess.hpp"
#include "segmenter.hpp"

namespace crownseg
{
// Table layouts shared by the CLI, the renderer and the tests.

inline const std::vector<std::string> kTreesHeader = {"tree_id",        "apex_x",     "apex_y",
                                                      "apex_height",    "crown_diameter", "crown_area",
                                                      "n_points",       "is_noise",   "hull_wkt"};
inline const std::vector<std::string> kPointsHeader = {"lsp_id", "x", "y", "elevation", "height", "tree_id"};
inline const std::vector<std::string> kStemsHeader = {"stem_id", "x", "y", "ground_z", "height", "crown_class"};
inline const std::vector<std::string> kLabelsHeader = {"point_index", "tree_id"};
inline const std::vector<std::string> kPairsHeader = {"stem_id", "tree_id", "score", "lean_deg", "height_diff_pct"};

struct TreeRow
{
  int tree_id = 0;
  double apex_x = 0.0;
  double apex_y = 0.0;
  double apex_height = 0.0;
  double crown_diameter = 0.0;
  double crown_area = 0.0;
  size_t n_points = 0;
  bool is_noise = false;
  std::vector<Vec2> hull;  // open ring, counter-clockwise; empty when degenerate
};

struct PointRow
{
  size_t lsp_id = 0;
  double x = 0.0;
  double y = 0.0;
  double elevation = 0.0;
  double height = 0.0;
  int tree_id = 0;
};

/// Closed-ring WKT polygon; degenerate hulls become POLYGON EMPTY.
inline std::string to_wkt(std::span<const Vec2> ring)
{
  if (ring.size() < 3)
    return "POLYGON EMPTY";
  std::string s = "POLYGON((";
  for (size_t i = 0; i <= ring.size(); ++i)
  {
    const Vec2 &v = ring[i % ring.size()];
    if (i)
      s += ", ";
    s += csv::fmt3(v.x) + " " + csv::fmt3(v.y);
  }
  return s + "))";
}

inline std::vector<Vec2> parse_wkt_polygon(const std::string &wkt)
{
  if (wkt == "POLYGON EMPTY")
    return {};
  const std::string prefix = "POLYGON((";
  if (wkt.rfind(prefix, 0) != 0 || wkt.size() < prefix.size() + 2 || wkt.substr(wkt.size() - 2) != "))")
    throw IoError("bad WKT polygon: " + wkt);
  std::stringstream body(wkt.substr(prefix.size(), wkt.size() - prefix.size() - 2));
  std::vector<Vec2> ring;
  std::string vertex;
  while (std::getline(body, vertex, ','))
  {
    std::istringstream vs(vertex);
    Vec2 v;
    if (!(vs >> v.x >> v.y))
      throw IoError("bad WKT vertex: " + vertex);
    ring.push_back(v);
  }
  if (ring.size() >= 2 && ring.front() == ring.back())
    ring.pop_back();
  return ring;
}

inline std::vector<TreeRow> tree_rows(std::span<const CrownSegment> segments)
{
  std::vector<TreeRow> rows;
  rows.reserve(segments.size());
  for (const auto &s : segments)
  {
    TreeRow r;
    r.tree_id = s.tree_id;
    r.apex_x = s.apex.x;
    r.apex_y = s.apex.y;
    r.apex_height = s.apex.height;
    r.crown_diameter = s.crown_diameter;
    r.crown_area = s.crown_area;
    r.n_points = s.member_ids.size();
    r.is_noise = s.is_noise;
    if (!s.hull.degenerate)
      r.hull = s.hull.vertices;
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_trees(std::ostream &out, std::span<const TreeRow> rows)
{
  for (size_t i = 0; i < kTreesHeader.size(); ++i)
    out << (i ? "," : "") << kTreesHeader[i];
  out << '\n';
  for (const auto &r : rows)
    out << r.tree_id << ',' << csv::fmt3(r.apex_x) << ',' << csv::fmt3(r.apex_y) << ',' << csv::fmt3(r.apex_height)
        << ',' << csv::fmt3(r.crown_diameter) << ',' << csv::fmt3(r.crown_area) << ',' << r.n_points << ','
        << (r.is_noise ? 1 : 0) << ',' << csv::quote(to_wkt(r.hull)) << '\n';
}

inline std::vector<TreeRow> read_trees(std::istream &in)
{
  std::vector<TreeRow> rows;
  for (const auto &f : csv::read_table(in, kTreesHeader, "trees table"))
  {
    TreeRow r;
    r.tree_id = static_cast<int>(csv::to_int(f[0], "tree_id"));
    r.apex_x = csv::to_double(f[1], "apex_x");
    r.apex_y = csv::to_double(f[2], "apex_y");
    r.apex_height = csv::to_double(f[3], "apex_height");
    r.crown_diameter = csv::to_double(f[4], "crown_diameter");
    r.crown_area = csv::to_double(f[5], "crown_area");
    r.n_points = static_cast<size_t>(csv::to_int(f[6], "n_points"));
    const auto noise = csv::to_int(f[7], "is_noise");
    if (noise != 0 && noise != 1)
      throw IoError("trees table: is_noise must be 0 or 1");
    r.is_noise = noise == 1;
    r.hull = parse_wkt_polygon(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_point_table(std::ostream &out, const LspSet &lsps, std::span<const int32_t> labels)
{
  for (size_t i = 0; i < kPointsHeader.size(); ++i)
    out << (i ? "," : "") << kPointsHeader[i];
  out << '\n';
  for (size_t i = 0; i < lsps.size(); ++i)
  {
    const Lsp &l = lsps[i];
    out << i << ',' << csv::fmt3(l.x) << ',' << csv::fmt3(l.y) << ',' << csv::fmt3(l.elevation) << ','
        << csv::fmt3(l.height) << ',' << (i < labels.size() ? labels[i] : 0) << '\n';
  }
}

inline std::vector<PointRow> read_point_table(std::istream &in)
{
  std::vector<PointRow> rows;
  for (const auto &f : csv::read_table(in, kPointsHeader, "points table"))
  {
    PointRow r;
    r.lsp_id = static_cast<size_t>(csv::to_int(f[0], "lsp_id"));
    r.x = csv::to_double(f[1], "x");
    r.y = csv::to_double(f[2], "y");
    r.elevation = csv::to_double(f[3], "elevation");
    r.height = csv::to_double(f[4], "height");
    r.tree_id = static_cast<int>(csv::to_int(f[5], "tree_id"));
    rows.push_back(r);
  }
  return rows;
}

inline void write_stems(std::ostream &out, std::span<const StemRecord> stems)
{
  for (size_t i = 0; i < kStemsHeader.size(); ++i)
    out << (i ? "," : "") << kStemsHeader[i];
  out << '\n';
  for (const auto &s : stems)
    out << s.stem_id << ',' << csv::fmt3(s.x) << ',' << csv::fmt3(s.y) << ',' << csv::fmt3(s.ground_z) << ','
        << csv::fmt3(s.height) << ',' << crown_class_code(s.crown_class) << '\n';
}

inline std::vector<StemRecord> read_stems(std::istream &in)
{
  std::vector<StemRecord> stems;
  for (const auto &f : csv::read_table(in, kStemsHeader, "stem map"))
  {
    StemRecord s;
    s.stem_id = f[0];
    s.x = csv::to_double(f[1], "x");
    s.y = csv::to_double(f[2], "y");
    s.ground_z = csv::to_double(f[3], "ground_z");
    s.height = csv::to_double(f[4], "height");
    if (!(s.height > 0.0))
      throw IoError("stem map: height must be positive for stem " + s.stem_id);
    const auto cls = parse_crown_class(f[5]);
    if (!cls)
      throw IoError("stem map: unknown crown class '" + f[5] + "'");
    s.crown_class = *cls;
    stems.push_back(std::move(s));
  }
  return stems;
}

inline void write_labels(std::ostream &out, std::span<const int> labels)
{
  out << "point_index,tree_id\n";
  for (size_t i = 0; i < labels.size(); ++i)
    out << i << ',' << labels[i] << '\n';
}

/// Non-noise rows as detections; apex elevation left to the evaluator.
inline std::vector<Detection> detections_from(std::span<const TreeRow> rows)
{
  std::vector<Detection> out;
  for (const auto &r : rows)
    if (!r.is_noise)
      out.push_back({r.tree_id, r.apex_x, r.apex_y, r.apex_height, std::nullopt});
  return out;
}

inline void write_pairs(std::ostream &out, const MatchReport &report, std::span<const Detection> detections,
                        std::span<const StemRecord> stems)
{
  for (size_t i = 0; i < kPairsHeader.size(); ++i)
    out << (i ? "," : "") << kPairsHeader[i];
  out << '\n';
  for (const auto &p : report.pairs)
    out << stems[p.stem].stem_id << ',' << detections[p.detection].tree_id << ',' << p.score << ','
        << csv::fmt3(p.lean_deg) << ',' << csv::fmt3(100.0 * p.height_diff_frac) << '\n';
}

inline std::string pct1(double fraction)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

/// key=value summary; rates are percentages with one decimal.
inline void write_summary(std::ostream &out, const MatchReport &report)
{
  auto block = [&](const std::string &prefix, const Accuracy &a) {
    out << prefix << "MT=" << a.mt << '\n'
        << prefix << "OE=" << a.oe << '\n'
        << prefix << "CE=" << a.ce << '\n'
        << prefix << "Re=" << pct1(a.recall) << '\n'
        << prefix << "Pr=" << pct1(a.precision) << '\n'
        << prefix << "F=" << pct1(a.f_score) << '\n';
  };
  block("", report.overall);
  block("dc.", report.upper);
  block("iod.", report.lower);
}
}  // namespace crownseg
