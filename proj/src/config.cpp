#include "hydre/config.hpp"

#include <fstream>

namespace hydre {

using jsonl::json;

StrategyParams RunConfig::strategy_params() const {
  StrategyParams p;
  p.scoring = scoring;
  p.scoring.seed = seed;
  p.mmr_alpha = mmr_alpha;
  p.mmr_pool = mmr_pool;
  return p;
}

void RunConfig::validate() const {
  scoring.validate();
  generation.validate();
  prompt.validate();
  Strategy::parse(strategy);
  if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
  if (!(mmr_alpha >= 0.0 && mmr_alpha <= 1.0)) throw ValidationError("mmr alpha must lie in [0, 1]");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

std::vector<std::filesystem::path> path_list(const std::filesystem::path& base, const json& j) {
  std::vector<std::filesystem::path> out;
  if (j.is_string()) {
    out.push_back(resolve(base, j.get<std::string>()));
  } else {
    for (const auto& p : j) out.push_back(resolve(base, p.get<std::string>()));
  }
  return out;
}

std::vector<std::string> path_strings(const std::vector<std::filesystem::path>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.string());
  return out;
}

}  // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base) {
  RunConfig c;
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      if (p.contains("ontology")) c.paths.ontology = resolve(base, p.at("ontology"));
      if (p.contains("bags")) c.paths.bags = resolve(base, p.at("bags"));
      if (p.contains("queries")) c.paths.queries = resolve(base, p.at("queries"));
      if (p.contains("scores")) c.paths.scores = path_list(base, p.at("scores"));
      if (p.contains("embeddings")) c.paths.embeddings = path_list(base, p.at("embeddings"));
      if (p.contains("cache")) c.paths.cache = resolve(base, p.at("cache"));
      if (p.contains("output")) c.paths.output = resolve(base, p.at("output"));
    }
    c.strategy = j.value("strategy", c.strategy);
    if (j.contains("scoring")) {
      const auto& s = j.at("scoring");
      c.scoring.w_sim = s.value("w_sim", c.scoring.w_sim);
      c.scoring.w_conf = s.value("w_conf", c.scoring.w_conf);
      c.scoring.threshold = s.value("threshold", c.scoring.threshold);
      c.scoring.k = s.value("k", c.scoring.k);
      const auto pooling = s.value("bag_sim_pooling", std::string("max"));
      if (pooling == "max") {
        c.scoring.bag_sim_pooling = Pooling::max;
      } else if (pooling == "mean") {
        c.scoring.bag_sim_pooling = Pooling::mean;
      } else {
        throw ValidationError("bag_sim_pooling must be max or mean");
      }
    }
    if (j.contains("mmr")) {
      const auto& m = j.at("mmr");
      c.mmr_alpha = m.value("alpha", c.mmr_alpha);
      if (m.contains("pool_size")) {
        c.mmr_pool = m.at("pool_size").is_null() ? std::nullopt
                                                 : std::optional(m.at("pool_size").get<std::size_t>());
      }
    }
    if (j.contains("generation")) {
      const auto& g = j.at("generation");
      c.generation.model_name = g.value("model_name", c.generation.model_name);
      c.generation.temperature = g.value("temperature", c.generation.temperature);
      c.generation.max_input_tokens = g.value("max_input_tokens", c.generation.max_input_tokens);
      c.generation.max_output_tokens = g.value("max_output_tokens", c.generation.max_output_tokens);
    }
    if (j.contains("template")) {
      const auto& t = j.at("template");
      c.prompt.task_instruction = t.value("task_instruction", c.prompt.task_instruction);
      c.prompt.include_definitions = t.value("include_definitions", c.prompt.include_definitions);
      const auto scope = t.value("relation_scope", std::string("full_ontology"));
      if (scope == "full_ontology") {
        c.prompt.relation_scope = RelationScope::full_ontology;
      } else if (scope == "candidates_only") {
        c.prompt.relation_scope = RelationScope::candidates_only;
      } else {
        throw ValidationError("relation_scope must be full_ontology or candidates_only");
      }
      if (t.contains("tags")) {
        const auto& tags = t.at("tags");
        c.prompt.tags.head_open = tags.value("head_open", c.prompt.tags.head_open);
        c.prompt.tags.head_close = tags.value("head_close", c.prompt.tags.head_close);
        c.prompt.tags.tail_open = tags.value("tail_open", c.prompt.tags.tail_open);
        c.prompt.tags.tail_close = tags.value("tail_close", c.prompt.tags.tail_close);
      }
    }
    if (j.contains("llm")) c.llm_endpoint = j.at("llm").value("endpoint", "");
    if (j.contains("embedding_service")) {
      c.embedding_endpoint = j.at("embedding_service").value("endpoint", "");
    }
    c.seed = j.value("seed", c.seed);
    c.parallelism = j.value("parallelism", c.parallelism);
    const auto mode = j.value("mode", std::string("replay"));
    if (mode == "replay") {
      c.mode = JudgeMode::replay;
    } else if (mode == "live") {
      c.mode = JudgeMode::live;
    } else {
      throw ValidationError("mode must be live or replay");
    }
    c.na_symbol = j.value("na_symbol", c.na_symbol);
    if (j.contains("confusion_pairs")) {
      for (const auto& pair : j.at("confusion_pairs")) {
        c.confusion_pairs.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  json pairs = json::array();
  for (const auto& [a, b] : c.confusion_pairs) pairs.push_back({a, b});
  return {
      {"paths",
       {{"ontology", c.paths.ontology.string()},
        {"bags", c.paths.bags.string()},
        {"queries", c.paths.queries.string()},
        {"scores", path_strings(c.paths.scores)},
        {"embeddings", path_strings(c.paths.embeddings)},
        {"cache", c.paths.cache.string()},
        {"output", c.paths.output.string()}}},
      {"strategy", c.strategy},
      {"scoring",
       {{"w_sim", c.scoring.w_sim},
        {"w_conf", c.scoring.w_conf},
        {"threshold", c.scoring.threshold},
        {"k", c.scoring.k},
        {"bag_sim_pooling", c.scoring.bag_sim_pooling == Pooling::max ? "max" : "mean"}}},
      {"mmr", {{"alpha", c.mmr_alpha}, {"pool_size", c.mmr_pool ? json(*c.mmr_pool) : json(nullptr)}}},
      {"generation",
       {{"model_name", c.generation.model_name},
        {"temperature", c.generation.temperature},
        {"max_input_tokens", c.generation.max_input_tokens},
        {"max_output_tokens", c.generation.max_output_tokens}}},
      {"template",
       {{"task_instruction", c.prompt.task_instruction},
        {"include_definitions", c.prompt.include_definitions},
        {"relation_scope",
         c.prompt.relation_scope == RelationScope::full_ontology ? "full_ontology" : "candidates_only"},
        {"tags",
         {{"head_open", c.prompt.tags.head_open},
          {"head_close", c.prompt.tags.head_close},
          {"tail_open", c.prompt.tags.tail_open},
          {"tail_close", c.prompt.tags.tail_close}}}}},
      {"llm", {{"endpoint", c.llm_endpoint}}},
      {"embedding_service", {{"endpoint", c.embedding_endpoint}}},
      {"seed", c.seed},
      {"parallelism", c.parallelism},
      {"mode", c.mode == JudgeMode::live ? "live" : "replay"},
      {"na_symbol", c.na_symbol},
      {"confusion_pairs", pairs},
  };
}

}  // namespace hydre
