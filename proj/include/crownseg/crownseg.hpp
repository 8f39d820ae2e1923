#pragma once

// Umbrella header.

#include "errors.hpp"
#include "esri_ascii.hpp"
#include "evaluator.hpp"
#include "geometry.hpp"
#include "hungarian.hpp"
#include "parallel.hpp"
#include "point_io.hpp"
#include "preprocess.hpp"
#include "segmenter.hpp"
#include "stats.hpp"
#include "svg.hpp"
#include "synthgen.hpp"
#include "tables.hpp"
#include "terrain.hpp"

namespace crownseg
{
inline constexpr const char *kVersion = "0.1.0";
/// Bumped whenever a CSV / grid / point layout changes.
inline constexpr int kFormatVersion = 1;
}  // namespace crownseg
