#pragma once

#include <stdexcept>
#include <string>

namespace crownseg
{
/// Unreadable or malformed input file.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but carries nothing to work with (no points, no ground points, ...).
class EmptyInputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A query fell outside the raster extent.
class ExtentError : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};
}  // namespace crownseg
