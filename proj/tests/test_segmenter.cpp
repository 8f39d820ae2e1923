#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace crownseg;

namespace
{
struct P
{
  double x, y, h;
};

LspSet make_lsps(const std::vector<P> &pts, double nps = 0.2)
{
  LspSet set;
  set.nps = nps;
  set.origin = {0, 0};
  for (size_t i = 0; i < pts.size(); ++i)
  {
    Lsp l;
    l.x = pts[i].x;
    l.y = pts[i].y;
    l.elevation = l.height = l.smoothed_height = pts[i].h;
    l.source_index = i;
    set.origin = {std::min(set.origin.x, l.x), std::min(set.origin.y, l.y)};
    set.points.push_back(l);
  }
  return set;
}

Profile make_profile(const std::vector<std::pair<double, double>> &dh)
{
  Profile p;
  for (size_t i = 0; i < dh.size(); ++i)
    p.samples.push_back({dh[i].first, dh[i].second, i, 0.0});
  return p;
}

Profile spaced(const std::vector<double> &gaps)
{
  std::vector<std::pair<double, double>> dh{{0.0, 20.0}};
  for (double g : gaps)
    dh.push_back({dh.back().first + g * g, 20.0 - dh.size() * 0.1});
  return make_profile(dh);
}

SegmenterConfig defaults()
{
  return {};
}
}  // namespace

TEST(FindGmx, Fixtures)
{
  const auto set = make_lsps({{0, 0, 10}, {1, 0, 20}, {2, 0, 15}});
  EXPECT_EQ(find_gmx(set, {})->lsp_id, 1u);
  LabelMap labels{0, 1, 0};
  EXPECT_EQ(find_gmx(set, labels)->lsp_id, 2u);
  LabelMap all{1, 1, 1};
  EXPECT_FALSE(find_gmx(set, all).has_value());
  const auto tie = make_lsps({{1, 0, 20}, {0, 0, 20}});
  EXPECT_EQ(find_gmx(tie, {})->x, 0.0);
}

TEST(BuildProfile, Fixtures)
{
  const auto cfg = defaults();
  const auto lone = make_lsps({{5, 5, 20}});
  const Apex a0{0, 5, 5, 20};
  EXPECT_EQ(build_profile(lone, a0, 0.0, cfg, {}).samples.size(), 1u);

  const auto row = make_lsps({{0, 0, 20}, {3, 0, 17}, {1, 0, 19}, {2, 0, 18}});
  const Apex a{0, 0, 0, 20};
  const auto p = build_profile(row, a, 0.0, cfg, {});
  ASSERT_EQ(p.samples.size(), 4u);
  EXPECT_EQ(p.samples[0].distance, 0.0);
  EXPECT_EQ(p.samples[1].lsp_id, 2u);
  EXPECT_EQ(p.samples[3].lsp_id, 1u);
  EXPECT_EQ(build_profile(row, a, 180.0, cfg, {}).samples.size(), 1u);
}

TEST(BuildProfile, BandEdge)
{
  const auto cfg = defaults();
  const double half = 0.5 * cfg.width(0.2);
  const auto set = make_lsps({{0, 0, 20}, {2, 1.1 * half, 19}, {3, 0.9 * half, 18}});
  const auto p = build_profile(set, {0, 0, 0, 20}, 0.0, cfg, {});
  ASSERT_EQ(p.samples.size(), 2u);
  EXPECT_EQ(p.samples[1].lsp_id, 2u);
}

TEST(BuildProfile, MergesEqualProjection)
{
  const auto set = make_lsps({{0, 0, 20}, {1, 0.15, 19}, {1, -0.05, 18}});
  const auto p = build_profile(set, {0, 0, 0, 20}, 0.0, defaults(), {});
  ASSERT_EQ(p.samples.size(), 2u);
  EXPECT_EQ(p.samples[1].lsp_id, 2u);  // nearer the ray wins
}

TEST(BuildProfile, AssignedLspEndsProfile)
{
  const auto set = make_lsps({{0, 0, 20}, {1, 0, 19}, {2, 0, 18}, {3, 0, 17}});
  LabelMap labels{0, 0, 7, 0};
  const auto p = build_profile(set, {0, 0, 0, 20}, 0.0, defaults(), labels);
  ASSERT_EQ(p.samples.size(), 2u);
  EXPECT_EQ(p.samples[1].lsp_id, 1u);
}

TEST(BuildProfile, MaxDistance)
{
  const auto set = make_lsps({{0, 0, 20}, {15.2, 0, 19}, {15.3, 0, 18}});
  EXPECT_EQ(build_profile(set, {0, 0, 0, 20}, 0.0, defaults(), {}).samples.size(), 2u);
}

TEST(DetectFirstGap, UniformSpacing)
{
  std::vector<double> g(29, std::sqrt(0.2));
  EXPECT_FALSE(detect_first_gap(spaced(g), defaults()).has_value());
  // distances i * 0.1 are not exact; their differences wobble by an ulp
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i < 75; ++i)
    dh.push_back({0.1 * i, 20.0});
  EXPECT_FALSE(detect_first_gap(make_profile(dh), defaults()).has_value());
}

TEST(DetectFirstGap, QuantileFixture)
{
  // interpolated quartiles: Q1 0.4, Q3 0.525, fence 1.275 -> 1.2 stays inside
  const std::vector<double> g{0.3, 0.4, 0.45, 0.5, 0.6, 0.45, 0.4, 1.2};
  std::vector<double> sorted = g;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_NEAR(quantile(sorted, 0.25), 0.4, 1e-12);
  EXPECT_NEAR(quantile(sorted, 0.75), 0.525, 1e-12);
  const auto prof = spaced(g);
  EXPECT_FALSE(detect_first_gap(prof, defaults()).has_value());

  auto wider = g;
  wider.back() = 1.3;
  const auto flagged = detect_first_gap(spaced(wider), defaults());
  ASSERT_TRUE(flagged.has_value());
  EXPECT_EQ(*flagged, 7u);
}

TEST(DetectFirstGap, ShortProfileSkipped)
{
  EXPECT_FALSE(detect_first_gap(spaced({0.4, 0.4, 3.0, 0.4}), defaults()).has_value());
}

TEST(DetectOpenCanopy, CatchesShortProfiles)
{
  const auto p = spaced({0.4, 0.4, 3.0, 0.4});
  ASSERT_TRUE(detect_open_canopy(p, defaults()).has_value());
  EXPECT_EQ(*detect_open_canopy(p, defaults()), 2u);
  EXPECT_FALSE(detect_open_canopy(spaced({0.4, 0.4, 1.2}), defaults()).has_value());
}

TEST(AdjacentWindow, Fixtures)
{
  const auto cfg = defaults();
  EXPECT_NEAR(adjacent_window_size(kSphereSlopeDeg, 25, 15, cfg), 2.3333333333, 1e-9);
  EXPECT_NEAR(adjacent_window_size(85.0, 25, 15, cfg), 0.9332124109, 1e-9);
  EXPECT_NEAR(adjacent_window_size(0.5 * (85.0 + kSphereSlopeDeg), 25, 15, cfg), 1.6332728721, 1e-9);
  // clamped outside the interval
  EXPECT_NEAR(adjacent_window_size(10.0, 25, 15, cfg), 2.3333333333, 1e-9);
  EXPECT_NEAR(adjacent_window_size(89.0, 25, 15, cfg), 0.9332124109, 1e-9);
  EXPECT_THROW(adjacent_window_size(40, 25, 0, cfg), std::domain_error);
  EXPECT_THROW(adjacent_window_size(40, -1, 5, cfg), std::domain_error);
}

TEST(ClassifyLocalMinimum, VShape)
{
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i <= 10; ++i)
    dh.push_back({0.2 * i, 25.0 - i});
  for (int i = 1; i <= 7; ++i)
    dh.push_back({2.0 + 0.2 * i, 15.0 + i});
  EXPECT_TRUE(classify_local_minimum(make_profile(dh), 10, defaults()));
}

TEST(ClassifyLocalMinimum, DipInsideCrown)
{
  std::vector<std::pair<double, double>> dh{{0, 25}, {0.2, 24.5}, {0.4, 24}, {0.6, 23.5}, {0.8, 23},
                                            {1.0, 24},  {1.2, 23},   {1.4, 22}, {1.6, 21},   {1.8, 20}};
  EXPECT_FALSE(classify_local_minimum(make_profile(dh), 4, defaults()));
}

TEST(ClassifyLocalMinimum, FlatRightSide)
{
  std::vector<std::pair<double, double>> dh{{0, 25}, {0.2, 24}, {0.4, 23}, {0.6, 22}, {0.8, 22.5},
                                            {1.0, 22.5}, {1.2, 22.5}, {1.4, 22.5}, {1.6, 22.5}};
  // the only rising step is inside the mdcw window, yet the right window median is 0
  EXPECT_FALSE(classify_local_minimum(make_profile(dh), 3, defaults()));
}

TEST(FindBoundary, GapCause)
{
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i <= 30; ++i)
    dh.push_back({0.2 * i, 25.0 - 0.2 * i});
  for (int i = 0; i < 20; ++i)
    dh.push_back({8.0 + 0.2 * i, 20.0 - 0.2 * i});
  const auto d = find_boundary(make_profile(dh), defaults());
  EXPECT_EQ(d.cause, BoundaryCause::gap);
  EXPECT_NEAR(d.boundary_distance, 6.0, 1e-9);
}

TEST(FindBoundary, TukeyGapOnLongProfile)
{
  // a 1.0 m void is below the open-canopy cut but far above the fence
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i <= 30; ++i)
    dh.push_back({0.2 * i, 25.0 - 0.2 * i});
  for (int i = 0; i < 20; ++i)
    dh.push_back({7.0 + 0.2 * i, 19.0 - 0.2 * i});
  const auto p = make_profile(dh);
  ASSERT_TRUE(detect_first_gap(p, defaults()).has_value());
  EXPECT_FALSE(detect_open_canopy(p, defaults()).has_value());
  const auto d = find_boundary(p, defaults());
  EXPECT_EQ(d.cause, BoundaryCause::gap);
  EXPECT_NEAR(d.boundary_distance, 6.0, 1e-9);
}

TEST(FindBoundary, SaddleBetweenCones)
{
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i <= 60; ++i)
  {
    const double d = 0.2 * i;
    dh.push_back({d, std::max(25.0 - 1.5 * d, 24.0 - 1.5 * std::abs(8.0 - d))});
  }
  const auto d = find_boundary(make_profile(dh), defaults());
  EXPECT_EQ(d.cause, BoundaryCause::local_minimum);
  EXPECT_NEAR(d.boundary_distance, 4.4, 1e-9);  // lowest sample; the cones meet at 13/3
}

TEST(FindBoundary, ProfileEndAndApexOnly)
{
  std::vector<std::pair<double, double>> dh;
  for (int i = 0; i <= 20; ++i)
    dh.push_back({0.2 * i, 20.0 - 0.5 * i});
  const auto end = find_boundary(make_profile(dh), defaults());
  EXPECT_EQ(end.cause, BoundaryCause::profile_end);
  EXPECT_NEAR(end.boundary_distance, 4.0, 1e-9);
  const auto only = find_boundary(make_profile({{0, 20}}), defaults());
  EXPECT_EQ(only.cause, BoundaryCause::apex_only);
  EXPECT_EQ(only.boundary_distance, 0.0);
}

TEST(ProfileCount, Doubling)
{
  const auto cfg = defaults();
  EXPECT_EQ(required_profile_count(3.0, 0.2, cfg), 16);
  EXPECT_EQ(required_profile_count(0.0, 0.2, cfg), 8);
  EXPECT_EQ(required_profile_count(15.24, 0.001, cfg), 512);
}

TEST(GenerateFan, LoneApex)
{
  const auto set = make_lsps({{5, 5, 20}});
  const auto fan = generate_fan(set, {0, 5, 5, 20}, defaults(), {});
  ASSERT_EQ(fan.size(), 8u);
  for (size_t i = 0; i < fan.size(); ++i)
  {
    EXPECT_DOUBLE_EQ(fan[i].azimuth, 45.0 * i);
    EXPECT_EQ(fan[i].cause, BoundaryCause::apex_only);
  }
}

TEST(GenerateFan, ThreeMetreDisc)
{
  // dense disc of radius 3 with a cone surface: 16 profiles suffice at nps 0.2
  std::vector<P> pts{{0, 0, 20}};
  for (double x = -3.0; x <= 3.0001; x += 0.1)
    for (double y = -3.0; y <= 3.0001; y += 0.1)
    {
      const double r = std::hypot(x, y);
      if (r > 1e-9 && r <= 3.0)
        pts.push_back({x, y, 20.0 - 2.0 * r});
    }
  const auto set = make_lsps(pts, 0.2);
  const auto fan = generate_fan(set, {0, 0, 0, 20}, defaults(), {});
  double rmax = 0.0;
  for (const auto &b : fan)
    rmax = std::max(rmax, b.boundary_distance);
  EXPECT_LE(rmax, 3.0 + 1e-9);
  EXPECT_GT(rmax, 2.8);
  EXPECT_EQ(fan.size(), 16u);
}

TEST(DelineateCrown, SquareOfBoundaries)
{
  std::vector<P> pts{{0, 0, 20}};
  for (int i = 0; i < 10; ++i)
    pts.push_back({-0.8 + 0.16 * i, 0.3, 18});
  const auto set = make_lsps(pts);
  std::vector<BoundaryDecision> b(4);
  const Vec2 corners[4] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  for (int i = 0; i < 4; ++i)
  {
    b[i].position = corners[i];
    b[i].boundary_distance = std::sqrt(2.0);
  }
  const auto seg = delineate_crown(set, {0, 0, 0, 20}, b, defaults(), {});
  EXPECT_GE(seg.member_ids.size(), 11u);
  EXPECT_FALSE(seg.is_noise);
  EXPECT_NEAR(seg.crown_diameter, 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(DelineateCrown, DegenerateAndSmall)
{
  const auto set = make_lsps({{0, 0, 20}, {0.3, 0, 19}});
  std::vector<BoundaryDecision> zero(8);
  const auto seg = delineate_crown(set, {0, 0, 0, 20}, zero, defaults(), {});
  EXPECT_EQ(seg.member_ids, std::vector<size_t>{0});
  EXPECT_TRUE(seg.is_noise);
  EXPECT_EQ(seg.crown_diameter, 0.0);

  std::vector<BoundaryDecision> small(3);
  small[0].position = {1.4, 0};
  small[1].position = {0, 0.5};
  small[2].position = {0.5, -0.5};
  auto cfg = defaults();
  cfg.rim_tolerance = 0.0;
  const auto tiny = delineate_crown(set, {0, 0, 0, 20}, small, cfg, {});
  EXPECT_NEAR(tiny.crown_diameter, 1.4866, 1e-3);
  cfg.mdcw = 1.5;
  EXPECT_TRUE(tiny.is_noise);
}

TEST(DelineateCrown, NoiseThresholdAt14)
{
  const auto set = make_lsps({{0, 0, 20}});
  std::vector<BoundaryDecision> b(3);
  b[0].position = {1.4, 0};
  b[1].position = {0.7, 0.3};
  b[2].position = {0.7, -0.3};
  auto cfg = defaults();
  cfg.rim_tolerance = 0.0;
  const auto seg = delineate_crown(set, {0, 0, 0, 20}, b, cfg, {});
  EXPECT_NEAR(seg.crown_diameter, 1.4, 1e-12);
  EXPECT_TRUE(seg.is_noise);
}

TEST(SegmentAll, Empty)
{
  EXPECT_TRUE(segment_all(LspSet{}, defaults()).empty());
}

TEST(SegmentAll, SingleCone)
{
  SceneSpec spec;
  spec.size = {40, 40};
  spec.seed = 4;
  TreeModel t;
  t.stem = {20, 20};
  t.total_height = 20;
  t.crown_radius = 4;
  spec.trees = {t};
  const auto r = crownseg::testing::run_pipeline(spec);
  size_t non_noise = 0, covered = 0;
  for (const auto &s : r.segments)
    if (!s.is_noise)
    {
      ++non_noise;
      covered = s.member_ids.size();
      EXPECT_NEAR(s.crown_diameter, 8.0, 0.5);
    }
  EXPECT_EQ(non_noise, 1u);
  EXPECT_GT(static_cast<double>(covered), 0.97 * r.lsps.size());
  EXPECT_TRUE(crownseg::testing::is_partition(r.segments, r.lsps.size()));
}

TEST(SegmentAll, TwoConesTallestFirst)
{
  SceneSpec spec;
  spec.size = {60, 30};
  spec.seed = 9;
  TreeModel a, b;
  a.stem = {15, 15};
  a.total_height = 25;
  a.crown_radius = 4;
  b.stem = {45, 15};
  b.total_height = 18;
  b.crown_radius = 3.5;
  spec.trees = {a, b};
  const auto r = crownseg::testing::run_pipeline(spec);
  std::vector<const CrownSegment *> trees;
  for (const auto &s : r.segments)
    if (!s.is_noise)
      trees.push_back(&s);
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(trees[0]->tree_id, 1);
  EXPECT_NEAR(trees[0]->apex.x, 15.0, 0.5);
  EXPECT_NEAR(trees[1]->apex.x, 45.0, 0.5);
  EXPECT_TRUE(crownseg::testing::check_exactness(r).exact);
}

TEST(SegmenterConfig, Validation)
{
  auto c = defaults();
  EXPECT_NO_THROW(c.validate());
  c.initial_profiles = 6;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = defaults();
  c.mdcw = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = defaults();
  c.cl_cone = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = defaults();
  c.epsilon_deg = 45;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = defaults();
  c.max_profiles = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SegmenterConfig, Defaults)
{
  const auto c = defaults();
  EXPECT_DOUBLE_EQ(c.max_profile_dist, 15.24);
  EXPECT_EQ(c.initial_profiles, 8);
  EXPECT_EQ(c.max_profiles, 512);
  EXPECT_DOUBLE_EQ(c.width(0.2), 0.4);
  EXPECT_DOUBLE_EQ(c.gap_fence_k, 6.0);
  EXPECT_EQ(c.min_gap_points, 8);
  EXPECT_DOUBLE_EQ(c.mdcw, 1.5);
  EXPECT_DOUBLE_EQ(c.epsilon_deg, 5.0);
  EXPECT_DOUBLE_EQ(c.cl_cone, 0.8);
  EXPECT_DOUBLE_EQ(c.cl_sphere, 0.7);
  EXPECT_DOUBLE_EQ(c.overlap_cone, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.overlap_sphere, 1.0 / 3.0);
  EXPECT_NEAR(c.sphere_slope_deg, 32.7042, 1e-4);
}
