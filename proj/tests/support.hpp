#pragma once

// Scene builders and pipeline helpers shared by the unit, property and acceptance tests.

#include <cctype>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <crownseg/crownseg.hpp>

namespace crownseg::testing
{
/// 1-5 well separated cone/sphere crowns; crown edges stay >= min_edge_gap apart.
inline SceneSpec isolated_scene(uint64_t seed, int n_trees, bool sloped, double min_edge_gap = 5.0)
{
  SceneSpec spec;
  spec.seed = seed;
  spec.size = {60.0, 60.0};
  spec.terrain = sloped ? Terrain::slope(30.0) : Terrain::flat();
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto lerp = [&](double a, double b) { return a + (b - a) * u(rng); };
  for (int attempt = 0; attempt < 10000 && static_cast<int>(spec.trees.size()) < n_trees; ++attempt)
  {
    TreeModel t;
    t.crown_radius = lerp(2.5, 5.0);
    t.total_height = lerp(14.0, 30.0);
    t.crown_ratio = lerp(0.4, 0.7);
    t.crown_shape = u(rng) < 0.5 ? CrownShape::cone : CrownShape::sphere;
    const double m = t.crown_radius + 2.0;
    t.stem = {lerp(m, spec.size.x - m), lerp(m, spec.size.y - m)};
    bool ok = true;
    for (const auto &o : spec.trees)
      if (distance(o.stem, t.stem) < o.crown_radius + t.crown_radius + min_edge_gap)
        ok = false;
    if (ok)
      spec.trees.push_back(t);
  }
  if (static_cast<int>(spec.trees.size()) != n_trees)
    throw std::runtime_error("isolated_scene: could not place trees");
  return spec;
}

struct PipelineResult
{
  Scene scene;
  DemRaster dem;
  LspSet lsps;
  std::vector<CrownSegment> segments;
};

inline DemRaster scene_dem(const SceneSpec &spec, const Scene &scene, double cell = 1.0)
{
  const GridExtent ext =
      GridExtent::covering(spec.origin, {spec.origin.x + spec.size.x, spec.origin.y + spec.size.y}, cell);
  return fill_voids(rasterize_ground(scene.points, cell, ext)).dem;
}

inline PipelineResult run_pipeline(const SceneSpec &spec, unsigned threads = 1, double nps = 0.2)
{
  PipelineResult r;
  r.scene = generate_scene(spec);
  r.dem = scene_dem(spec, r.scene);
  PreprocessConfig pc;
  pc.nps = nps;
  pc.threads = threads;
  r.lsps = preprocess(r.scene.points, r.dem, pc);
  SegmenterConfig sc;
  sc.threads = threads;
  r.segments = segment_all(r.lsps, sc);
  return r;
}

/// Per non-noise segment: ground-truth label counts of its member LSPs.
inline std::map<int, std::map<int, size_t>> label_composition(const PipelineResult &r)
{
  std::map<int, std::map<int, size_t>> out;
  for (const auto &s : r.segments)
  {
    if (s.is_noise)
      continue;
    auto &c = out[s.tree_id];
    for (size_t id : s.member_ids)
      ++c[r.scene.labels[r.lsps[id].source_index]];
  }
  return out;
}

struct ExactnessReport
{
  bool exact = true;
  size_t labelled = 0;
  size_t wrong = 0;
  size_t noise_points = 0;
  std::string detail;
};

/// Every non-noise segment is pure, and truth trees map one-to-one onto them.
inline ExactnessReport check_exactness(const PipelineResult &r)
{
  ExactnessReport rep;
  std::set<int> seen;
  for (const auto &[tree_id, comp] : label_composition(r))
  {
    size_t best = 0, total = 0;
    int owner = 0;
    for (const auto &[label, n] : comp)
    {
      total += n;
      if (n > best)
      {
        best = n;
        owner = label;
      }
    }
    rep.labelled += total;
    rep.wrong += total - best;
    if (owner == 0 || !seen.insert(owner).second || best != total)
    {
      rep.exact = false;
      rep.detail += "segment " + std::to_string(tree_id) + " impure or duplicate; ";
    }
  }
  if (seen.size() != r.scene.stems.size())
  {
    rep.exact = false;
    rep.detail += std::to_string(seen.size()) + " of " + std::to_string(r.scene.stems.size()) + " trees found; ";
  }
  for (const auto &s : r.segments)
    if (s.is_noise)
      rep.noise_points += s.member_ids.size();
  return rep;
}

/// Segment membership partitions [0, n).
inline bool is_partition(const std::vector<CrownSegment> &segments, size_t n)
{
  std::vector<int> hits(n, 0);
  for (const auto &s : segments)
    for (size_t id : s.member_ids)
    {
      if (id >= n)
        return false;
      ++hits[id];
    }
  for (int h : hits)
    if (h != 1)
      return false;
  return true;
}

inline std::string trees_csv(const std::vector<CrownSegment> &segments)
{
  std::ostringstream out;
  write_trees(out, tree_rows(segments));
  return out.str();
}

inline std::string points_csv(const LspSet &lsps, const std::vector<CrownSegment> &segments)
{
  std::ostringstream out;
  write_point_table(out, lsps, label_points(segments, lsps.size()));
  return out.str();
}

/// Detections for the evaluator with apex elevation from the DEM.
inline std::vector<Detection> detections(const PipelineResult &r)
{
  std::vector<Detection> out;
  for (const auto &s : r.segments)
    if (!s.is_noise)
      out.push_back({s.tree_id, s.apex.x, s.apex.y, s.apex.height,
                     ground_elevation_at(r.dem, s.apex.x, s.apex.y) + s.apex.height});
  return out;
}
/// Minimal XML well-formedness check: balanced, properly nested tags, quoted
/// attributes, no stray '<' or '&' in text. Enough for the renderer's output.
inline bool xml_well_formed(const std::string &doc, std::string *why = nullptr)
{
  auto fail = [&](const std::string &msg) {
    if (why)
      *why = msg;
    return false;
  };
  std::vector<std::string> stack;
  bool root_seen = false;
  size_t i = 0;
  while (i < doc.size())
  {
    if (doc[i] == '&')
    {
      const size_t semi = doc.find(';', i);
      if (semi == std::string::npos || semi - i > 8)
        return fail("bare ampersand");
      i = semi + 1;
      continue;
    }
    if (doc[i] != '<')
    {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i])))
        return fail("text outside the root element");
      ++i;
      continue;
    }
    if (doc.compare(i, 5, "<?xml") == 0)
    {
      if (i != 0)
        return fail("misplaced declaration");
      const size_t end = doc.find("?>", i);
      if (end == std::string::npos)
        return fail("unterminated declaration");
      i = end + 2;
      continue;
    }
    if (doc.compare(i, 4, "<!--") == 0)
    {
      const size_t end = doc.find("-->", i);
      if (end == std::string::npos)
        return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    // tag: scan to the closing '>' honouring quotes
    size_t j = i + 1;
    char quote = 0;
    for (; j < doc.size(); ++j)
    {
      if (quote)
      {
        if (doc[j] == quote)
          quote = 0;
        else if (doc[j] == '<')
          return fail("'<' inside attribute");
      }
      else if (doc[j] == '"' || doc[j] == '\'')
        quote = doc[j];
      else if (doc[j] == '>')
        break;
      else if (doc[j] == '<')
        return fail("'<' inside tag");
    }
    if (j >= doc.size())
      return fail("unterminated tag");
    std::string body = doc.substr(i + 1, j - i - 1);
    i = j + 1;
    const bool closing = !body.empty() && body[0] == '/';
    const bool empty = !body.empty() && body.back() == '/';
    if (closing)
      body.erase(0, 1);
    if (empty)
      body.pop_back();
    size_t k = 0;
    while (k < body.size() && (std::isalnum(static_cast<unsigned char>(body[k])) || body[k] == ':' || body[k] == '-' ||
                               body[k] == '_' || body[k] == '.'))
      ++k;
    const std::string name = body.substr(0, k);
    if (name.empty() || !std::isalpha(static_cast<unsigned char>(name[0])))
      return fail("bad tag name '" + body + "'");
    // attributes: name="value" pairs
    std::set<std::string> attrs;
    while (k < body.size())
    {
      while (k < body.size() && std::isspace(static_cast<unsigned char>(body[k])))
        ++k;
      if (k >= body.size())
        break;
      if (closing)
        return fail("attributes on a closing tag");
      const size_t eq = body.find('=', k);
      if (eq == std::string::npos || eq + 1 >= body.size() || (body[eq + 1] != '"' && body[eq + 1] != '\''))
        return fail("unquoted attribute in <" + name + ">");
      const std::string attr = body.substr(k, eq - k);
      if (attr.empty() || attr.find_first_of(" \t") != std::string::npos || !attrs.insert(attr).second)
        return fail("bad or duplicate attribute in <" + name + ">");
      const size_t close = body.find(body[eq + 1], eq + 2);
      if (close == std::string::npos)
        return fail("unterminated attribute value");
      k = close + 1;
    }
    if (closing)
    {
      if (stack.empty() || stack.back() != name)
        return fail("mismatched </" + name + ">");
      stack.pop_back();
    }
    else
    {
      if (stack.empty() && root_seen)
        return fail("second root element");
      root_seen = true;
      if (!empty)
        stack.push_back(name);
    }
  }
  if (!stack.empty())
    return fail("unclosed <" + stack.back() + ">");
  return root_seen ? true : fail("no root element");
}
}  // namespace crownseg::testing
