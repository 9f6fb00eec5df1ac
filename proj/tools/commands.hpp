#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace hhmlab {

const std::vector<std::string>& subcommands();

/// Runs one pipeline into `out` and writes manifest.json there. Returns 0
/// when every check passes and 1 otherwise; library errors propagate.
int run_command(const std::string& sub, const Scenario& s, const std::filesystem::path& out);

/// Full front end: argument parsing, validation, exit-code mapping
/// (0 pass, 1 check failed, 2 invalid input, 3 numeric failure).
int hhmlab_main(int argc, const char* const* argv);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace hhmlab
