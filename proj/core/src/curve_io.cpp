#include "ecal/curve_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecal/error.hpp"

namespace ecal {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t row) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError(path.string() + ": row " + std::to_string(row) + ": cannot parse '" + s +
                    "' as a number");
  }
  return v;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawCsv read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  RawCsv csv;
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": empty file, header row required");
  }
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  csv.header = split(line);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != csv.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(csv.header.size()));
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (const auto& c : cells) values.push_back(parse_double(c, path, row));
    csv.rows.push_back(std::move(values));
  }
  return csv;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  return out;
}

std::vector<std::vector<double>> columns_of(std::span<const GridFunction> curves) {
  std::vector<std::vector<double>> cols;
  for (const auto& c : curves) cols.emplace_back(c.values().begin(), c.values().end());
  return cols;
}

}  // namespace

std::size_t CurveTable::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw DataError("curve '" + name + "' not found");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    throw DataError("format_double: conversion failed");
  }
  return std::string(buf, ptr);
}

CurveTable read_curve_csv(const std::filesystem::path& path) {
  RawCsv csv = read_raw(path);
  if (csv.header.empty() || csv.header.front() != "t") {
    throw DataError(path.string() + ": first column must be named 't'");
  }
  if (csv.header.size() < 2) {
    throw DataError(path.string() + ": no curve columns");
  }
  std::vector<double> t;
  for (const auto& r : csv.rows) t.push_back(r[0]);
  Grid grid(std::move(t));
  CurveTable table{grid, {csv.header.begin() + 1, csv.header.end()}, {}};
  for (std::size_t c = 1; c < csv.header.size(); ++c) {
    std::vector<double> v;
    v.reserve(csv.rows.size());
    for (const auto& r : csv.rows) v.push_back(r[c]);
    table.curves.emplace_back(grid, std::move(v));
  }
  return table;
}

void write_curve_csv(const std::filesystem::path& path, const Grid& grid,
                     std::span<const std::string> names,
                     std::span<const std::vector<double>> columns) {
  if (names.size() != columns.size()) {
    throw DataError("write_curve_csv: one name per column required");
  }
  auto out = open_out(path);
  out << "t";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << format_double(grid[i]);
    for (const auto& col : columns) {
      if (col.size() != grid.size()) {
        throw DataError("write_curve_csv: column length does not match the grid");
      }
      out << ',' << format_double(col[i]);
    }
    out << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const std::string> names,
                     std::span<const GridFunction> curves) {
  if (curves.empty()) {
    throw DataError("write_curve_csv: no curves");
  }
  const auto cols = columns_of(curves);
  write_curve_csv(path, curves.front().grid(), names, cols);
}

MatrixTable read_matrix_csv(const std::filesystem::path& path) {
  RawCsv csv = read_raw(path);
  MatrixTable m{csv.header, Eigen::MatrixXd(static_cast<Eigen::Index>(csv.rows.size()),
                                            static_cast<Eigen::Index>(csv.header.size()))};
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
      m.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = csv.rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, std::span<const std::string> header,
                      const Eigen::MatrixXd& data) {
  if (static_cast<Eigen::Index>(header.size()) != data.cols()) {
    throw DataError("write_matrix_csv: header does not match column count");
  }
  auto out = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      out << (j ? "," : "") << format_double(data(i, j));
    }
    out << '\n';
  }
}

void write_decomposition(const std::filesystem::path& dir, const DecomposedEnsemble& ensemble,
                         std::span<const std::string> names) {
  if (names.size() != ensemble.size()) {
    throw DataError("write_decomposition: one name per curve required");
  }
  write_curve_csv(dir / "aligned.csv", names, ensemble.aligned_curves);

  std::vector<std::vector<double>> warps;
  std::vector<std::vector<double>> shooting;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    warps.emplace_back(ensemble.warps[i].values().begin(), ensemble.warps[i].values().end());
    shooting.emplace_back(ensemble.shooting_vectors[i].values().begin(),
                          ensemble.shooting_vectors[i].values().end());
  }
  const Grid unit = ensemble.reference.grid().normalized();
  write_curve_csv(dir / "warps.csv", unit, names, warps);
  write_curve_csv(dir / "shooting.csv", unit, names, shooting);

  const Grid& g = ensemble.reference.grid();
  nlohmann::json meta = {
      {"schema_version", 1},
      {"reference_id", ensemble.reference_id},
      {"lambda", ensemble.lambda},
      {"n_curves", ensemble.size()},
      {"grid", {{"n", g.size()}, {"t_min", g.front()}, {"t_max", g.back()},
                {"uniform", g.uniform_spacing()}}},
      {"amplitude_distances", ensemble.amplitude_distances},
  };
  auto out = open_out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

LoadedDecomposition read_decomposition(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) {
    throw DataError("missing " + (dir / "meta.json").string());
  }
  const auto meta = nlohmann::json::parse(meta_in);
  LoadedDecomposition out;
  out.reference_id = meta.at("reference_id").get<std::string>();
  out.lambda = meta.at("lambda").get<double>();

  CurveTable aligned = read_curve_csv(dir / "aligned.csv");
  CurveTable warps = read_curve_csv(dir / "warps.csv");
  CurveTable shooting = read_curve_csv(dir / "shooting.csv");
  if (aligned.names != warps.names || aligned.names != shooting.names) {
    throw DataError(dir.string() + ": decomposition files disagree on curve names");
  }
  out.names = aligned.names;
  out.aligned = std::move(aligned.curves);
  for (const auto& w : warps.curves) {
    out.warps.emplace_back(w.grid(), std::vector<double>(w.values().begin(), w.values().end()));
  }
  for (const auto& v : shooting.curves) {
    out.shooting.emplace_back(v.grid(),
                              std::vector<double>(v.values().begin(), v.values().end()));
  }
  return out;
}

}  // namespace ecal
