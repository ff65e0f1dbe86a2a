#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rksd/common.hpp"

namespace rksd {

// A sample of n observations in d dimensions, one row per observation.
using DataSet = Matrix;

// Parses a headerless comma-separated CSV of finite reals. Throws IOError on
// malformed input, naming the first offending line.
inline DataSet load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw IOError(path + ":" + std::to_string(lineno) + ": not a number: " + cell);
      }
      if (!std::isfinite(v))
        throw IOError(path + ":" + std::to_string(lineno) + ": non-finite value");
      row.push_back(v);
    }
    if (row.empty()) throw IOError(path + ":" + std::to_string(lineno) + ": empty row");
    if (ncols == 0) ncols = row.size();
    if (row.size() != ncols)
      throw IOError(path + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(ncols) + " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IOError(path + ": no rows");
  DataSet data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncols; ++j)
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return data;
}

inline void require_finite(const DataSet& data) {
  if (!data.allFinite()) throw IOError("data contains NaN or Inf");
}

}  // namespace rksd
