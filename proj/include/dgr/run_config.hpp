#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dgr/train_config.hpp"

namespace dgr {

// Training settings plus the file locations a CLI run needs.
struct RunConfig {
  TrainConfig train;
  // Either a single data file that gets split, or pre-split train/test files.
  std::string data_file;
  std::string train_file;
  std::string test_file;
  std::string format = "pair-list";
  double split_ratio = 0.8;
  std::uint64_t split_seed = 2024;
  std::string out_dir = "out";
  bool binary_index = false;

  bool operator==(const RunConfig&) const = default;
};

// "key = value" lines; '#' starts a comment; unknown keys are a UsageError.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);

std::string serialize_run_config(const RunConfig& config);

// Applies a "key=value" override as given to --set.
void apply_override(RunConfig& config, const std::string& assignment);

// Shared value formatting so serialize -> parse is exact.
std::string format_double(double value);

}  // namespace dgr
