#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "reviewguard/datasets/dataset.hpp"

namespace reviewguard::cli {

// Settings shared by all subcommands. Loaded from the --config JSON file,
// then overridden by command-line flags, then validated before any stage
// touches the filesystem.
struct RunConfig {
  std::filesystem::path store = "store";
  std::filesystem::path annotations = "annotations.jsonl";
  std::optional<std::filesystem::path> sources;  // venue source mapping; built-in defaults otherwise
  std::map<std::string, std::filesystem::path> backends;  // role -> backend config path
  std::filesystem::path calls_log = "logs/calls.jsonl";
  double conflict_threshold = 3.0;
  double binoculars_threshold = 0.9;
  std::size_t binoculars_min_tokens = 0;
  std::size_t token_budget = 100000;
  std::size_t min_synthetic_tokens = 40;
  std::size_t overlap_cap = 12;
  datasets::SplitRatios split_ratios;
  std::uint64_t seed = 7;
  int serve_port = 8080;

  // Throws ValidationError naming the first offending field.
  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace reviewguard::cli
