#include <fmt/format.h>

#include "reviewguard/cli/run_config.hpp"
#include "reviewguard/llmio/client.hpp"
#include "reviewguard/util/jsonl.hpp"

namespace reviewguard::cli {

using nlohmann::json;

void RunConfig::validate() const {
  if (store.empty()) throw ValidationError("config: store path is empty");
  if (conflict_threshold < 0) throw ValidationError("config: conflict_threshold must be >= 0");
  if (binoculars_threshold <= 0) throw ValidationError("config: binoculars_threshold must be > 0");
  if (token_budget == 0) throw ValidationError("config: token_budget must be > 0");
  if (serve_port < 0 || serve_port > 65535) throw ValidationError("config: serve_port out of range");
  split_ratios.validate();
  for (const auto& [role, path] : backends) {
    try {
      llmio::load_backend_config(path);
    } catch (const Error& e) {
      throw ValidationError(fmt::format("config: backend '{}': {}", role, e.what()));
    }
  }
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("store")) c.store = j.at("store").get<std::string>();
    if (j.contains("annotations")) c.annotations = j.at("annotations").get<std::string>();
    if (j.contains("sources") && !j.at("sources").is_null()) c.sources = j.at("sources").get<std::string>();
    const auto backends = j.value("backends", json::object());
    for (const auto& [role, path] : backends.items()) c.backends[role] = path.get<std::string>();
    if (j.contains("calls_log")) c.calls_log = j.at("calls_log").get<std::string>();
    c.conflict_threshold = j.value("conflict_threshold", c.conflict_threshold);
    c.binoculars_threshold = j.value("binoculars_threshold", c.binoculars_threshold);
    c.binoculars_min_tokens = j.value("binoculars_min_tokens", c.binoculars_min_tokens);
    c.token_budget = j.value("token_budget", c.token_budget);
    c.min_synthetic_tokens = j.value("min_synthetic_tokens", c.min_synthetic_tokens);
    c.overlap_cap = j.value("overlap_cap", c.overlap_cap);
    if (j.contains("split_ratios")) {
      const auto& r = j.at("split_ratios");
      c.split_ratios = {r.value("train", 0.8), r.value("validation", 0.1), r.value("test", 0.1)};
    }
    c.seed = j.value("seed", c.seed);
    c.serve_port = j.value("serve_port", c.serve_port);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(jsonl::read_text(path));
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  json backends = json::object();
  for (const auto& [role, path] : c.backends) backends[role] = path.string();
  return json{{"store", c.store.string()},
              {"annotations", c.annotations.string()},
              {"sources", c.sources ? json(c.sources->string()) : json(nullptr)},
              {"backends", backends},
              {"calls_log", c.calls_log.string()},
              {"conflict_threshold", c.conflict_threshold},
              {"binoculars_threshold", c.binoculars_threshold},
              {"binoculars_min_tokens", c.binoculars_min_tokens},
              {"token_budget", c.token_budget},
              {"min_synthetic_tokens", c.min_synthetic_tokens},
              {"overlap_cap", c.overlap_cap},
              {"split_ratios",
               {{"train", c.split_ratios.train}, {"validation", c.split_ratios.validation}, {"test", c.split_ratios.test}}},
              {"seed", c.seed},
              {"serve_port", c.serve_port}};
}

}  // namespace reviewguard::cli
