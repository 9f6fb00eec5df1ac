#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hhm/core/grids.hpp"

namespace hhm::io {

/// 17 significant digits: enough for an exact double round trip.
std::string format_double(double x);
double parse_double(const std::string& s);

nlohmann::json grid_metadata(const RadialGrid& grid, const TimeGrid& times);
RadialGrid radial_grid_from(const nlohmann::json& meta);
TimeGrid time_grid_from(const nlohmann::json& meta);

/// Sidecar path for a CSV file: "<stem>.json" next to it.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// One row per (t_k, r_j) sample with header `t,r,value`, plus a JSON
/// sidecar holding the grid metadata and any extra entries in `extra`.
void write_trajectory(const std::filesystem::path& csv, const RadialGrid& grid,
                      const TimeGrid& times, const Field& values,
                      const nlohmann::json& extra = nlohmann::json::object());

struct LoadedTrajectory {
  RadialGrid grid;
  TimeGrid times;
  Field values;
  nlohmann::json metadata;
};

LoadedTrajectory read_trajectory(const std::filesystem::path& csv);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Splits one CSV line on commas.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hhm::io
