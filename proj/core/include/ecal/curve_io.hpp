#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecal/align.hpp"
#include "ecal/grid.hpp"

namespace ecal {

/// Curve CSV: header row required, first column `t`, one curve per further
/// column, `.` as the decimal separator.
struct CurveTable {
  Grid grid;
  std::vector<std::string> names;
  std::vector<GridFunction> curves;

  // Index of the named column; throws DataError when absent.
  std::size_t index_of(const std::string& name) const;
};

CurveTable read_curve_csv(const std::filesystem::path& path);
void write_curve_csv(const std::filesystem::path& path, const Grid& grid,
                     std::span<const std::string> names,
                     std::span<const std::vector<double>> columns);
void write_curve_csv(const std::filesystem::path& path, std::span<const std::string> names,
                     std::span<const GridFunction> curves);

struct MatrixTable {
  std::vector<std::string> header;
  Eigen::MatrixXd data;
};

MatrixTable read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, std::span<const std::string> header,
                      const Eigen::MatrixXd& data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// aligned.csv, warps.csv, shooting.csv and meta.json under `dir`.
void write_decomposition(const std::filesystem::path& dir, const DecomposedEnsemble& ensemble,
                         std::span<const std::string> names);

struct LoadedDecomposition {
  std::string reference_id;
  double lambda = 0.0;
  std::vector<std::string> names;
  std::vector<GridFunction> aligned;
  std::vector<WarpingFunction> warps;
  std::vector<ShootingVector> shooting;
};

LoadedDecomposition read_decomposition(const std::filesystem::path& dir);

}  // namespace ecal
