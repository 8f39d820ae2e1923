// crownseg command-line front end: dem, segment, evaluate, synth, render.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <crownseg/crownseg.hpp>

namespace
{
using namespace crownseg;
using Clock = std::chrono::steady_clock;

enum Exit : int
{
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kEmpty = 3,
  kExtent = 4
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Point3> load_cloud(const std::string &path)
{
  auto points = read_points(path);
  if (points.empty())
    throw IoError(path + ": no points");
  return points;
}

// ---- dem ----------------------------------------------------------------

struct DemArgs
{
  std::string input;
  std::string out = "dem.asc";
  double cell_size = 1.0;
};

int run_dem(const DemArgs &a)
{
  if (!(a.cell_size > 0.0))
    throw std::invalid_argument("--cell-size must be positive");
  const auto points = load_cloud(a.input);
  // cover every point, not just ground, so the cloud normalises against this grid
  Vec2 lo{points.front().x, points.front().y}, hi = lo;
  for (const auto &p : points)
  {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const auto filled = fill_voids(rasterize_ground(points, a.cell_size, GridExtent::covering(lo, hi, a.cell_size)));
  write_esri_ascii(a.out, filled.dem);
  std::printf("cells=%zu (%d x %d) fill_passes=%d -> %s\n", filled.dem.cells.size(), filled.dem.ncols,
              filled.dem.nrows, filled.passes, a.out.c_str());
  return kOk;
}

// ---- segment ------------------------------------------------------------

struct SegmentArgs
{
  std::string input;
  std::string dem;
  std::string out_prefix;
  std::optional<double> nps;
  double cell_size = 1.0;
  PreprocessConfig pre;
  SegmenterConfig seg;
};

int run_segment(SegmentArgs a, unsigned threads)
{
  a.pre.threads = a.seg.threads = threads;
  if (a.nps)
    a.pre.nps = *a.nps;
  a.pre.validate();
  a.seg.validate();
  const auto t0 = Clock::now();

  const auto points = load_cloud(a.input);
  if (!a.nps)
  {
    if (points.size() < 2)
      throw EmptyInputError("cannot estimate nps from fewer than two points");
    a.pre.nps = estimate_nps(points);
    a.pre.validate();
  }
  std::printf("nps=%.4f (%s)\n", a.pre.nps, a.nps ? "given" : "estimated");

  DemRaster dem;
  if (!a.dem.empty())
    dem = read_esri_ascii(a.dem);
  else
  {
    Vec2 lo{points.front().x, points.front().y}, hi = lo;
    for (const auto &p : points)
    {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    dem = fill_voids(rasterize_ground(points, a.cell_size, GridExtent::covering(lo, hi, a.cell_size))).dem;
  }

  const LspSet lsps = preprocess(points, dem, a.pre);
  const auto segments = segment_all(lsps, a.seg);
  const auto labels = label_points(segments, lsps.size());
  const auto rows = tree_rows(segments);

  auto trees_out = csv::open_out(a.out_prefix + "trees.csv");
  write_trees(trees_out, rows);
  auto points_out = csv::open_out(a.out_prefix + "points.csv");
  write_point_table(points_out, lsps, labels);
  if (!trees_out || !points_out)
    throw IoError("write failed under prefix '" + a.out_prefix + "'");

  size_t noise = 0;
  for (const auto &s : segments)
    noise += s.is_noise ? 1 : 0;
  std::printf("lsps=%zu trees=%zu noise=%zu runtime=%.3fs\n", lsps.size(), segments.size() - noise, noise,
              seconds_since(t0));
  return kOk;
}

// ---- evaluate -----------------------------------------------------------

struct EvaluateArgs
{
  std::string trees;
  std::string stems;
  std::string out_prefix;
  MatchThresholds thresholds;
};

int run_evaluate(const EvaluateArgs &a)
{
  a.thresholds.validate();
  auto trees_in = csv::open_in(a.trees);
  const auto rows = read_trees(trees_in);
  auto stems_in = csv::open_in(a.stems);
  const auto stems = read_stems(stems_in);

  const auto detections = detections_from(rows);
  const auto report = evaluate(detections, stems, a.thresholds);

  auto pairs_out = csv::open_out(a.out_prefix + "pairs.csv");
  write_pairs(pairs_out, report, detections, stems);
  auto summary_out = csv::open_out(a.out_prefix + "summary.txt");
  write_summary(summary_out, report);
  if (!pairs_out || !summary_out)
    throw IoError("write failed under prefix '" + a.out_prefix + "'");
  write_summary(std::cout, report);
  return kOk;
}

// ---- synth --------------------------------------------------------------

struct SynthArgs
{
  std::string spec_file;
  std::string out_prefix;
  std::optional<uint64_t> seed;
  int trees = 50;
  double width = 100.0;
  double height = 100.0;
  double density = 25.0;
  double ground_density = 1.5;
  double noise = 0.05;
  std::string terrain = "flat";
  double grade = 0.0;
  double amplitude = 0.0;
  double wavelength = 50.0;
};

CrownShape shape_from(const std::string &s)
{
  if (s == "cone")
    return CrownShape::cone;
  if (s == "sphere")
    return CrownShape::sphere;
  if (s == "ellipsoid")
    return CrownShape::ellipsoid;
  throw std::invalid_argument("unknown crown shape '" + s + "'");
}

Terrain terrain_from(const std::string &kind, double grade, double amplitude, double wavelength)
{
  if (kind == "flat")
    return Terrain::flat();
  if (kind == "slope")
    return Terrain::slope(grade);
  if (kind == "waves")
  {
    if (!(wavelength > 0.0))
      throw std::invalid_argument("terrain wavelength must be positive");
    return Terrain::waves(amplitude, wavelength);
  }
  throw std::invalid_argument("unknown terrain '" + kind + "' (flat, slope, waves)");
}

// Scene from a JSON document: explicit "trees", or a "stand" block laid out on a lattice.
SceneSpec spec_from_json(const nlohmann::json &j, std::optional<uint64_t> seed_flag)
{
  SceneSpec spec;
  spec.seed = seed_flag.value_or(j.value("seed", uint64_t{1}));
  if (j.contains("origin"))
    spec.origin = {j["origin"].at(0).get<double>(), j["origin"].at(1).get<double>()};
  if (j.contains("size"))
    spec.size = {j["size"].at(0).get<double>(), j["size"].at(1).get<double>()};
  spec.point_density = j.value("density", spec.point_density);
  spec.ground_density = j.value("ground_density", spec.ground_density);
  spec.noise_sigma_z = j.value("noise_sigma_z", spec.noise_sigma_z);
  if (j.contains("terrain"))
  {
    const auto &t = j["terrain"];
    spec.terrain = terrain_from(t.value("kind", std::string("flat")), t.value("grade_pct", 0.0),
                                t.value("amplitude", 0.0), t.value("wavelength", 50.0));
    spec.terrain.base = t.value("base", spec.terrain.base);
  }
  if (j.contains("trees"))
  {
    for (const auto &t : j["trees"])
    {
      TreeModel m;
      m.stem = {t.at("x").get<double>(), t.at("y").get<double>()};
      m.total_height = t.value("height", m.total_height);
      m.crown_shape = shape_from(t.value("shape", std::string("cone")));
      m.crown_ratio = t.value("crown_ratio", m.crown_ratio);
      m.crown_radius = t.value("crown_radius", m.crown_radius);
      m.lean_deg = t.value("lean_deg", 0.0);
      m.lean_azimuth_deg = t.value("lean_azimuth_deg", 0.0);
      const auto cls = parse_crown_class(t.value("crown_class", std::string("C")));
      if (!cls)
        throw std::invalid_argument("unknown crown class in spec");
      m.crown_class = *cls;
      spec.trees.push_back(m);
    }
  }
  else if (j.contains("stand"))
  {
    const auto &s = j["stand"];
    StandParams p;
    p.n_trees = s.value("n_trees", p.n_trees);
    p.origin = spec.origin;
    p.size = spec.size;
    p.spacing = s.value("spacing", p.spacing);
    p.jitter = s.value("jitter", p.jitter);
    p.min_radius = s.value("min_radius", p.min_radius);
    p.max_radius = s.value("max_radius", p.max_radius);
    p.min_height = s.value("min_height", p.min_height);
    p.max_height = s.value("max_height", p.max_height);
    p.seed = spec.seed;
    spec.trees = layout_stand(p);
  }
  return spec;
}

int run_synth(const SynthArgs &a)
{
  SceneSpec spec;
  if (!a.spec_file.empty())
  {
    std::ifstream in(a.spec_file);
    if (!in)
      throw IoError("cannot open " + a.spec_file);
    nlohmann::json j;
    try
    {
      in >> j;
      spec = spec_from_json(j, a.seed);
    }
    catch (const nlohmann::json::exception &e)
    {
      throw IoError(a.spec_file + ": " + e.what());
    }
  }
  else
  {
    spec.seed = a.seed.value_or(1);
    spec.size = {a.width, a.height};
    spec.point_density = a.density;
    spec.ground_density = a.ground_density;
    spec.noise_sigma_z = a.noise;
    spec.terrain = terrain_from(a.terrain, a.grade, a.amplitude, a.wavelength);
    if (a.trees > 0)
    {
      StandParams p;
      p.n_trees = a.trees;
      p.size = spec.size;
      p.seed = spec.seed;
      spec.trees = layout_stand(p);
    }
  }
  spec.validate();
  const Scene scene = generate_scene(spec);

  std::ofstream pts(a.out_prefix + "points.xyz");
  if (!pts)
    throw IoError("cannot open " + a.out_prefix + "points.xyz for writing");
  write_points(pts, scene.points);
  auto stems = csv::open_out(a.out_prefix + "stems.csv");
  write_stems(stems, scene.stems);
  auto labels = csv::open_out(a.out_prefix + "labels.csv");
  write_labels(labels, scene.labels);
  if (!pts || !stems || !labels)
    throw IoError("write failed under prefix '" + a.out_prefix + "'");

  size_t ground = 0;
  for (const auto &p : scene.points)
    ground += p.cls == PointClass::ground ? 1 : 0;
  std::printf("points=%zu ground=%zu canopy=%zu trees=%zu seed=%llu\n", scene.points.size(), ground,
              scene.points.size() - ground, scene.stems.size(), static_cast<unsigned long long>(spec.seed));
  std::printf("nominal_post_spacing=%.4f\n", 1.0 / std::sqrt(spec.point_density));
  return kOk;
}

// ---- render -------------------------------------------------------------

struct RenderArgs
{
  std::string trees;
  std::string points;
  std::string out = "crowns.svg";
  double width_px = 1000.0;
};

int run_render(const RenderArgs &a)
{
  if (!(a.width_px > 100.0))
    throw std::invalid_argument("--width must exceed 100 px");
  auto trees_in = csv::open_in(a.trees);
  const auto trees = read_trees(trees_in);
  auto points_in = csv::open_in(a.points);
  const auto points = read_point_table(points_in);
  auto out = csv::open_out(a.out);
  SvgOptions opt;
  opt.width_px = a.width_px;
  render_svg(out, trees, points, opt);
  if (!out)
    throw IoError("write failed: " + a.out);
  std::printf("trees=%zu points=%zu -> %s\n", trees.size(), points.size(), a.out.c_str());
  return kOk;
}
}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Individual tree crown segmentation from LiDAR point clouds"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads; never changes output")->check(CLI::Range(1u, 256u));
  app.set_version_flag("--version", std::string("crownseg ") + kVersion + " (format " +
                                        std::to_string(kFormatVersion) + ")");

  DemArgs dem;
  auto *dem_cmd = app.add_subcommand("dem", "Build a bare-earth ESRI ASCII grid from class-2 points");
  dem_cmd->add_option("input", dem.input, "Point file (x y z [class])")->required();
  dem_cmd->add_option("-o,--out", dem.out, "Output grid")->capture_default_str();
  dem_cmd->add_option("--cell-size", dem.cell_size, "Cell size, metres")->capture_default_str();

  SegmentArgs seg;
  auto *seg_cmd = app.add_subcommand("segment", "Delineate tree crowns");
  seg_cmd->add_option("input", seg.input, "Point file (x y z [class])")->required();
  seg_cmd->add_option("--dem", seg.dem, "Bare-earth grid; built from class-2 points when omitted");
  seg_cmd->add_option("--cell-size", seg.cell_size, "Cell size of a DEM built on the fly")->capture_default_str();
  seg_cmd->add_option("--nps", seg.nps, "Nominal post spacing, metres; estimated when omitted");
  seg_cmd->add_option("--min-height", seg.pre.min_height, "Drop LSPs lower than this")->capture_default_str();
  seg_cmd->add_option("--mdcw", seg.seg.mdcw, "Minimum detectable crown width")->capture_default_str();
  seg_cmd->add_option("--max-profile-dist", seg.seg.max_profile_dist, "Profile length")->capture_default_str();
  seg_cmd->add_option("--epsilon-deg", seg.seg.epsilon_deg, "Cone slope is 90 minus this")->capture_default_str();
  seg_cmd->add_option("--clc", seg.seg.cl_cone, "Crown ratio, narrow cone")->capture_default_str();
  seg_cmd->add_option("--cls", seg.seg.cl_sphere, "Crown ratio, sphere")->capture_default_str();
  seg_cmd->add_option("--oc", seg.seg.overlap_cone, "Overlap factor, cone")->capture_default_str();
  seg_cmd->add_option("--os", seg.seg.overlap_sphere, "Overlap factor, sphere")->capture_default_str();
  seg_cmd->add_option("--gap-k", seg.seg.gap_fence_k, "Tukey fence multiplier")->capture_default_str();
  seg_cmd->add_option("--max-profiles", seg.seg.max_profiles, "Profile count cap")->capture_default_str();
  seg_cmd->add_option("--max-spacing", seg.seg.max_sample_spacing, "Spacing that always ends a profile")
      ->capture_default_str();
  seg_cmd->add_option("--rim-tolerance", seg.seg.rim_tolerance, "Hull margin counted as crown (default 2 * nps)");
  seg_cmd->add_option("--out-prefix", seg.out_prefix, "Prefix for trees.csv and points.csv");

  EvaluateArgs ev;
  auto *ev_cmd = app.add_subcommand("evaluate", "Match detections to a stem map");
  ev_cmd->add_option("trees", ev.trees, "trees.csv from segment")->required();
  ev_cmd->add_option("stems", ev.stems, "Stem map CSV")->required();
  ev_cmd->add_option("--out-prefix", ev.out_prefix, "Prefix for pairs.csv and summary.txt");
  std::vector<double> height_pct(ev.thresholds.tiers.size());
  for (size_t i = 0; i < ev.thresholds.tiers.size(); ++i)
  {
    const std::string n = std::to_string(i + 1);
    auto &tier = ev.thresholds.tiers[i];
    height_pct[i] = 100.0 * tier.height_frac;
    ev_cmd->add_option("--tier" + n + "-lean-deg", tier.lean_deg, "Lean limit, tier " + n)->capture_default_str();
    ev_cmd->add_option("--tier" + n + "-height-pct", height_pct[i], "Height difference limit (%), tier " + n)
        ->capture_default_str();
    ev_cmd->add_option("--tier" + n + "-score", tier.score, "Score, tier " + n)->capture_default_str();
  }

  SynthArgs syn;
  auto *syn_cmd = app.add_subcommand("synth", "Generate a synthetic scene with ground truth");
  syn_cmd->add_option("--spec", syn.spec_file, "JSON scene spec (overrides the flags below)");
  syn_cmd->add_option("--seed", syn.seed, "Random seed");
  syn_cmd->add_option("--out-prefix", syn.out_prefix, "Prefix for points.xyz, stems.csv, labels.csv");
  syn_cmd->add_option("--trees", syn.trees, "Stand size")->capture_default_str();
  syn_cmd->add_option("--width", syn.width, "Extent along x, metres")->capture_default_str();
  syn_cmd->add_option("--height", syn.height, "Extent along y, metres")->capture_default_str();
  syn_cmd->add_option("--density", syn.density, "Canopy returns per m^2")->capture_default_str();
  syn_cmd->add_option("--ground-density", syn.ground_density, "Ground returns per m^2")->capture_default_str();
  syn_cmd->add_option("--noise", syn.noise, "Vertical noise sigma, metres")->capture_default_str();
  syn_cmd->add_option("--terrain", syn.terrain, "flat | slope | waves")->capture_default_str();
  syn_cmd->add_option("--grade", syn.grade, "Slope grade, percent")->capture_default_str();
  syn_cmd->add_option("--amplitude", syn.amplitude, "Wave amplitude, metres")->capture_default_str();
  syn_cmd->add_option("--wavelength", syn.wavelength, "Wave length, metres")->capture_default_str();

  RenderArgs ren;
  auto *ren_cmd = app.add_subcommand("render", "Draw a top-down crown map as SVG");
  ren_cmd->add_option("trees", ren.trees, "trees.csv")->required();
  ren_cmd->add_option("points", ren.points, "points.csv")->required();
  ren_cmd->add_option("-o,--out", ren.out, "Output SVG")->capture_default_str();
  ren_cmd->add_option("--width", ren.width_px, "Image width, px")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try
  {
    if (*dem_cmd)
      return run_dem(dem);
    if (*seg_cmd)
      return run_segment(seg, threads);
    if (*ev_cmd)
    {
      for (size_t i = 0; i < height_pct.size(); ++i)
        ev.thresholds.tiers[i].height_frac = height_pct[i] / 100.0;
      return run_evaluate(ev);
    }
    if (*syn_cmd)
      return run_synth(syn);
    if (*ren_cmd)
      return run_render(ren);
  }
  catch (const ExtentError &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExtent;
  }
  catch (const EmptyInputError &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kEmpty;
  }
  catch (const IoError &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  catch (const std::invalid_argument &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
