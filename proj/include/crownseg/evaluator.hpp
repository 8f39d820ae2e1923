#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hungarian.hpp"
#include "stats.hpp"

namespace crownseg
{
enum class CrownClass
{
  dominant,
  codominant,
  intermediate,
  overtopped,
  dead
};

inline std::optional<CrownClass> parse_crown_class(std::string_view code)
{
  if (code == "D")
    return CrownClass::dominant;
  if (code == "C")
    return CrownClass::codominant;
  if (code == "I")
    return CrownClass::intermediate;
  if (code == "O")
    return CrownClass::overtopped;
  if (code == "DEAD")
    return CrownClass::dead;
  return std::nullopt;
}

inline std::string_view crown_class_code(CrownClass c)
{
  switch (c)
  {
  case CrownClass::dominant: return "D";
  case CrownClass::codominant: return "C";
  case CrownClass::intermediate: return "I";
  case CrownClass::overtopped: return "O";
  case CrownClass::dead: return "DEAD";
  }
  return "?";
}

/// Dominant and co-dominant trees form the upper group; the rest the lower one.
enum class ClassGroup
{
  upper,
  lower
};

inline ClassGroup group_of(CrownClass c)
{
  return (c == CrownClass::dominant || c == CrownClass::codominant) ? ClassGroup::upper : ClassGroup::lower;
}

struct StemRecord
{
  std::string stem_id;
  double x = 0.0;
  double y = 0.0;
  double ground_z = 0.0;
  double height = 0.0;
  CrownClass crown_class = CrownClass::intermediate;
};

/// A detected apex. When the apex elevation is unknown the stem's ground
/// elevation plus the detected height stands in for it.
struct Detection
{
  int tree_id = 0;
  double x = 0.0;
  double y = 0.0;
  double height = 0.0;
  std::optional<double> elevation;
};

struct MatchTier
{
  double lean_deg;
  double height_frac;
  double score;
};

struct MatchThresholds
{
  std::vector<MatchTier> tiers{{5.0, 0.10, 100.0}, {10.0, 0.20, 70.0}, {15.0, 0.30, 40.0}};

  void validate() const
  {
    if (tiers.empty())
      throw std::invalid_argument("match thresholds: no tiers");
    for (size_t i = 0; i < tiers.size(); ++i)
    {
      if (!(tiers[i].score > 0.0) || !(tiers[i].lean_deg > 0.0) || !(tiers[i].height_frac > 0.0))
        throw std::invalid_argument("match thresholds: values must be positive");
      if (i > 0 && !(tiers[i].lean_deg > tiers[i - 1].lean_deg && tiers[i].height_frac > tiers[i - 1].height_frac &&
                     tiers[i].score < tiers[i - 1].score))
        throw std::invalid_argument("match thresholds: tiers must loosen while scores decrease");
    }
  }
};

struct MatchGeometry
{
  double lean_deg;
  double height_diff_frac;
};

inline MatchGeometry match_geometry(const StemRecord &stem, const Detection &det)
{
  if (!(stem.height > 0.0))
    throw std::domain_error("match: stem height must be positive");
  const double apex_z = det.elevation.value_or(stem.ground_z + det.height);
  const double rise = apex_z - stem.ground_z;
  if (!(rise > 0.0))
    throw std::domain_error("match: apex must lie above the stem's ground elevation");
  const double horizontal = std::hypot(det.x - stem.x, det.y - stem.y);
  return {std::atan(horizontal / rise) * kRadToDeg, std::abs(stem.height - det.height) / stem.height};
}

/// Score of the strictest tier whose lean and height limits both hold; 0 if none.
inline double tier_score(const MatchGeometry &g, const MatchThresholds &t)
{
  for (const auto &tier : t.tiers)
    if (g.lean_deg <= tier.lean_deg && g.height_diff_frac <= tier.height_frac)
      return tier.score;
  return 0.0;
}

inline double match_score(const StemRecord &stem, const Detection &det, const MatchThresholds &t)
{
  return tier_score(match_geometry(stem, det), t);
}

/// Rows are detections, columns are stems. An apex at or below a stem's
/// ground cannot belong to that stem and scores 0.
inline ScoreMatrix build_score_matrix(std::span<const Detection> detections, std::span<const StemRecord> stems,
                                      const MatchThresholds &t)
{
  ScoreMatrix m(detections.size(), stems.size());
  for (size_t i = 0; i < detections.size(); ++i)
  {
    for (size_t j = 0; j < stems.size(); ++j)
    {
      const double apex_z = detections[i].elevation.value_or(stems[j].ground_z + detections[i].height);
      m(i, j) = apex_z > stems[j].ground_z ? match_score(stems[j], detections[i], t) : 0.0;
    }
  }
  return m;
}

struct Accuracy
{
  int mt = 0;
  int oe = 0;
  int ce = 0;
  double recall = 0.0;  // fractions in [0, 1]
  double precision = 0.0;
  double f_score = 0.0;
};

inline Accuracy accuracy_from_counts(int mt, int oe, int ce)
{
  Accuracy a{mt, oe, ce};
  a.recall = (mt + oe) > 0 ? static_cast<double>(mt) / (mt + oe) : 0.0;
  a.precision = (mt + ce) > 0 ? static_cast<double>(mt) / (mt + ce) : 0.0;
  a.f_score = (a.recall + a.precision) > 0.0 ? 2.0 * a.recall * a.precision / (a.recall + a.precision) : 0.0;
  return a;
}

struct MatchPair
{
  size_t detection;
  size_t stem;
  double score;
  double lean_deg;
  double height_diff_frac;
};

struct MatchReport
{
  std::vector<MatchPair> pairs;
  std::vector<size_t> omissions;    // stem indices
  std::vector<size_t> commissions;  // detection indices
  Accuracy overall;
  Accuracy upper;  // dominant + co-dominant
  Accuracy lower;  // intermediate + overtopped + dead
};

/// Counts and rates from an assignment. A commission is charged to the group
/// of its best-scoring stem, or to the lower group when it scores 0 everywhere.
inline MatchReport compute_metrics(const Assignment &assignment, const ScoreMatrix &scores,
                                   std::span<const CrownClass> stem_classes)
{
  if (scores.cols != stem_classes.size())
    throw std::invalid_argument("compute_metrics: one crown class per stem required");
  MatchReport r;
  std::vector<char> det_used(scores.rows, 0), stem_used(scores.cols, 0);
  std::array<int, 2> mt{}, oe{}, ce{};
  auto slot = [](ClassGroup g) { return g == ClassGroup::upper ? 0 : 1; };

  for (const auto &[det, stem] : assignment.pairs)
  {
    det_used[det] = 1;
    stem_used[stem] = 1;
    r.pairs.push_back({det, stem, scores(det, stem), 0.0, 0.0});
    ++mt[slot(group_of(stem_classes[stem]))];
  }
  for (size_t j = 0; j < scores.cols; ++j)
  {
    if (stem_used[j])
      continue;
    r.omissions.push_back(j);
    ++oe[slot(group_of(stem_classes[j]))];
  }
  for (size_t i = 0; i < scores.rows; ++i)
  {
    if (det_used[i])
      continue;
    r.commissions.push_back(i);
    ClassGroup g = ClassGroup::lower;
    double best = 0.0;
    for (size_t j = 0; j < scores.cols; ++j)
    {
      if (scores(i, j) > best)
      {
        best = scores(i, j);
        g = group_of(stem_classes[j]);
      }
    }
    ++ce[slot(g)];
  }
  const int n_mt = static_cast<int>(assignment.pairs.size());
  r.overall = accuracy_from_counts(n_mt, static_cast<int>(r.omissions.size()), static_cast<int>(r.commissions.size()));
  r.upper = accuracy_from_counts(mt[0], oe[0], ce[0]);
  r.lower = accuracy_from_counts(mt[1], oe[1], ce[1]);
  return r;
}

/// Full protocol: score matrix, optimal assignment, metrics.
inline MatchReport evaluate(std::span<const Detection> detections, std::span<const StemRecord> stems,
                            const MatchThresholds &t = {})
{
  t.validate();
  const ScoreMatrix scores = build_score_matrix(detections, stems, t);
  const Assignment assignment = hungarian_max(scores);
  std::vector<CrownClass> classes;
  classes.reserve(stems.size());
  for (const auto &s : stems)
    classes.push_back(s.crown_class);
  MatchReport report = compute_metrics(assignment, scores, classes);
  for (auto &p : report.pairs)
  {
    const auto g = match_geometry(stems[p.stem], detections[p.detection]);
    p.lean_deg = g.lean_deg;
    p.height_diff_frac = g.height_diff_frac;
  }
  return report;
}
}  // namespace crownseg
