#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace crownseg::csv
{
/// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split(std::string_view line)
{
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i)
  {
    const char c = line[i];
    if (quoted)
    {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
      {
        fields.back() += '"';
        ++i;
      }
      else if (c == '"')
        quoted = false;
      else
        fields.back() += c;
    }
    else if (c == '"')
      quoted = true;
    else if (c == ',')
      fields.emplace_back();
    else if (c != '\r')
      fields.back() += c;
  }
  return fields;
}

inline std::string quote(std::string_view field)
{
  std::string out = "\"";
  for (char c : field)
  {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Fixed three-decimal formatting used by every table.
inline std::string fmt3(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000")
    s = "0.000";
  return s;
}

inline double to_double(const std::string &s, std::string_view what)
{
  try
  {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  }
  catch (const std::exception &)
  {
    throw IoError("bad numeric value '" + s + "' for " + std::string(what));
  }
}

inline long long to_int(const std::string &s, std::string_view what)
{
  try
  {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  }
  catch (const std::exception &)
  {
    throw IoError("bad integer value '" + s + "' for " + std::string(what));
  }
}

/// Reads a headed table; verifies the header matches `expected` column names.
inline std::vector<std::vector<std::string>> read_table(std::istream &in, const std::vector<std::string> &expected,
                                                        std::string_view name)
{
  std::string line;
  if (!std::getline(in, line))
    throw IoError(std::string(name) + ": missing header row");
  const auto header = split(line);
  if (header != expected)
    throw IoError(std::string(name) + ": unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
  {
    if (line.empty() || line == "\r")
      continue;
    auto fields = split(line);
    if (fields.size() != expected.size())
      throw IoError(std::string(name) + ": row " + std::to_string(rows.size() + 2) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(expected.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline std::ifstream open_in(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path + " for writing");
  return out;
}
}  // namespace crownseg::csv
