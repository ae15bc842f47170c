#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hydre/baselines.hpp"
#include "hydre/judge.hpp"
#include "hydre/jsonl.hpp"
#include "hydre/prompting.hpp"
#include "hydre/providers.hpp"

namespace hydre {

struct RunPaths {
  std::filesystem::path ontology;
  std::filesystem::path bags;
  std::filesystem::path queries;
  std::vector<std::filesystem::path> scores;
  std::vector<std::filesystem::path> embeddings;
  std::filesystem::path cache;
  std::filesystem::path output = "out";
};

// Everything a run needs. Precedence: CLI flags > config file > these defaults.
struct RunConfig {
  RunPaths paths;
  std::string strategy = "hydre";
  ScoringConfig scoring;
  double mmr_alpha = kDefaultMmrAlpha;
  std::optional<std::size_t> mmr_pool = kDefaultMmrPool;
  GenerationParams generation;
  PromptTemplate prompt;
  std::string llm_endpoint;
  std::string embedding_endpoint;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  JudgeMode mode = JudgeMode::replay;
  std::string na_symbol = "NA";
  std::vector<std::pair<std::string, std::string>> confusion_pairs;

  StrategyParams strategy_params() const;
  void validate() const;
};

// Relative paths are resolved against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const jsonl::json& j, const std::filesystem::path& base_dir = {});
jsonl::json config_to_json(const RunConfig& config);

}  // namespace hydre
