#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "terrain.hpp"

namespace crownseg
{
// ESRI ASCII grid: six header lines then rows of values, top (northern) row first.

inline void write_esri_ascii(std::ostream &out, const DemRaster &dem)
{
  out << "ncols " << dem.ncols << '\n'
      << "nrows " << dem.nrows << '\n'
      << std::setprecision(12) << "xllcorner " << dem.origin.x << '\n'
      << "yllcorner " << dem.origin.y << '\n'
      << "cellsize " << dem.cell_size << '\n'
      << "NODATA_value " << DemRaster::kNoData << '\n';
  out << std::fixed << std::setprecision(4);
  for (int row = dem.nrows - 1; row >= 0; --row)
  {
    for (int col = 0; col < dem.ncols; ++col)
    {
      if (col)
        out << ' ';
      const double v = dem.at(col, row);
      out << (DemRaster::is_nodata(v) ? DemRaster::kNoData : v);
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

inline void write_esri_ascii(const std::string &path, const DemRaster &dem)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path + " for writing");
  write_esri_ascii(out, dem);
  if (!out)
    throw IoError("failed writing " + path);
}

inline DemRaster read_esri_ascii(std::istream &in)
{
  std::map<std::string, double> header;
  std::string key;
  // header keys are alphabetic; the first numeric token starts the data block
  while (in >> std::ws && std::isalpha(in.peek()))
  {
    in >> key;
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    double value = 0.0;
    if (!(in >> value))
      throw IoError("esri ascii: bad value for header key '" + key + "'");
    header[key] = value;
  }
  auto need = [&](const char *name) {
    auto it = header.find(name);
    if (it == header.end())
      throw IoError(std::string("esri ascii: missing header key '") + name + "'");
    return it->second;
  };
  const int ncols = static_cast<int>(need("ncols"));
  const int nrows = static_cast<int>(need("nrows"));
  const double cell = need("cellsize");
  Vec2 origin;
  if (header.count("xllcorner") && header.count("yllcorner"))
    origin = {header["xllcorner"], header["yllcorner"]};
  else if (header.count("xllcenter") && header.count("yllcenter"))
    origin = {header["xllcenter"] - 0.5 * cell, header["yllcenter"] - 0.5 * cell};
  else
    throw IoError("esri ascii: missing lower-left corner");
  const double nodata = header.count("nodata_value") ? header["nodata_value"] : DemRaster::kNoData;

  DemRaster dem;
  try
  {
    dem = DemRaster(origin, cell, ncols, nrows);
  }
  catch (const std::invalid_argument &e)
  {
    throw IoError(std::string("esri ascii: ") + e.what());
  }
  for (int row = nrows - 1; row >= 0; --row)
  {
    for (int col = 0; col < ncols; ++col)
    {
      double v = 0.0;
      if (!(in >> v))
        throw IoError("esri ascii: truncated data block");
      dem.at(col, row) = (v == nodata) ? DemRaster::kNoData : v;
    }
  }
  return dem;
}

inline DemRaster read_esri_ascii(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  return read_esri_ascii(in);
}
}  // namespace crownseg
