#include "hhm/core/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hhm/core/errors.hpp"

namespace hhm::io {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (errno == ERANGE && !std::isfinite(v)))
    throw InputShapeError("csv: cannot parse number '" + s + "'");
  return v;
}

nlohmann::json grid_metadata(const RadialGrid& grid, const TimeGrid& times) {
  return {{"r_max", grid.r_max()},
          {"n_points", grid.size()},
          {"h", grid.spacing()},
          {"weights", grid.weight_rule()},
          {"t_final", times.t_final()},
          {"n_steps", times.n_steps()},
          {"dt", times.dt()}};
}

RadialGrid radial_grid_from(const nlohmann::json& meta) {
  return RadialGrid(meta.at("r_max").get<double>(), meta.at("n_points").get<std::size_t>());
}

TimeGrid time_grid_from(const nlohmann::json& meta) {
  return TimeGrid(meta.at("t_final").get<double>(), meta.at("n_steps").get<std::size_t>());
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

void write_trajectory(const std::filesystem::path& csv, const RadialGrid& grid,
                      const TimeGrid& times, const Field& values, const nlohmann::json& extra) {
  if (values.rows() != times.n_slices() || values.cols() != grid.size())
    throw InputShapeError("write_trajectory: field shape does not match grids");
  std::ofstream out(csv);
  if (!out) throw Error("cannot open " + csv.string() + " for writing");
  out << "t,r,value\n";
  for (std::size_t k = 0; k < values.rows(); ++k)
    for (std::size_t j = 0; j < values.cols(); ++j)
      out << format_double(times.t(k)) << ',' << format_double(grid.r(j)) << ','
          << format_double(values(k, j)) << '\n';

  auto meta = grid_metadata(grid, times);
  meta["format"] = "t,r,value";
  for (auto& [key, val] : extra.items()) meta[key] = val;
  write_json(sidecar_path(csv), meta);
}

LoadedTrajectory read_trajectory(const std::filesystem::path& csv) {
  auto meta = read_json(sidecar_path(csv));
  RadialGrid grid = radial_grid_from(meta);
  TimeGrid times = time_grid_from(meta);
  Field values(times.n_slices(), grid.size());

  std::ifstream in(csv);
  if (!in) throw Error("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "t,r,value") throw InputShapeError("read_trajectory: unexpected header '" + line + "'");
  std::size_t count = 0;
  const std::size_t expected = values.rows() * values.cols();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 3 || count >= expected)
      throw InputShapeError("read_trajectory: malformed row " + std::to_string(count + 2));
    values.flat()[count++] = parse_double(cells[2]);
  }
  if (count != expected) throw InputShapeError("read_trajectory: row count does not match grids");
  return {grid, times, std::move(values), std::move(meta)};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace hhm::io
