#include "hydre/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "hydre/baselines.hpp"
#include "hydre/corpus.hpp"
#include "hydre/evaluation.hpp"
#include "hydre/http.hpp"
#include "hydre/prompting.hpp"
#include "hydre/providers.hpp"
#include "hydre/records.hpp"
#include "hydre/selection.hpp"

#ifndef HYDRE_VERSION
#define HYDRE_VERSION "0.0.0"
#endif

namespace hydre::cli {

namespace fs = std::filesystem;
using jsonl::json;

std::vector<std::size_t> parse_k_list(const std::string& spec) {
  auto to_k = [&](const std::string& s) -> std::size_t {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || v == 0) throw ValidationError("bad --k value: " + spec);
    return v;
  };
  std::vector<std::size_t> out;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const auto lo = to_k(spec.substr(0, dots));
    const auto hi = to_k(spec.substr(dots + 2));
    if (hi < lo) throw ValidationError("bad --k range: " + spec);
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_k(part));
  if (out.empty()) throw ValidationError("empty --k");
  return out;
}

namespace {

struct Workspace {
  RunConfig config;
  Strategy strategy;
  std::optional<Corpus> corpus;
  std::vector<QueryInstance> queries;
  Providers providers;
  std::vector<FlatExample> flat;
};

Workspace load_workspace(const RunConfig& config) {
  config.validate();
  Workspace ws;
  ws.config = config;
  ws.strategy = Strategy::parse(config.strategy);
  auto ontology = load_ontology(config.paths.ontology, config.na_symbol);
  auto bags = load_bags(config.paths.bags, ontology);
  ws.queries = load_queries(config.paths.queries, ontology);
  ws.corpus.emplace(std::move(ontology), std::move(bags));
  if (!config.paths.scores.empty()) {
    ws.providers.scores = load_scores(config.paths.scores, ws.corpus->ontology());
  }
  if (!config.paths.embeddings.empty()) {
    ws.providers.embeddings = load_embeddings(config.paths.embeddings);
  }
  ws.flat = flatten(ws.corpus->bags());

  // Cross-references required by the strategy.
  const bool need_scores = ws.strategy.needs_scores(config.scoring);
  const bool need_emb = ws.strategy.needs_embeddings(config.scoring);
  if (need_scores && !ws.providers.scores) {
    throw ValidationError("strategy " + ws.strategy.name() + " needs score files");
  }
  if (need_emb && !ws.providers.embeddings) {
    throw ValidationError("strategy " + ws.strategy.name() + " needs embedding files");
  }
  auto check = [&](const std::string& id, const char* what) {
    if (need_scores && !ws.providers.scores->contains(id)) {
      throw ValidationError(std::string(what) + " " + id + " has no score row");
    }
    if (need_emb && !ws.providers.embeddings->contains(id)) {
      throw ValidationError(std::string(what) + " " + id + " has no embedding");
    }
  };
  for (const auto& bag : ws.corpus->bags()) {
    for (const auto& s : bag.sentences) check(s.sentence_id, "sentence");
  }
  for (const auto& q : ws.queries) {
    check(q.query_id, "query");
    if (ws.corpus->find_sentence(q.query_id) != nullptr) {
      throw ValidationError("query id " + q.query_id + " collides with a training sentence id");
    }
  }
  return ws;
}

// Everything that determines the selections for one k.
json selection_settings(const Workspace& ws, std::size_t k) {
  auto j = config_to_json(ws.config);
  j["scoring"]["k"] = k;
  return {{"seed", ws.config.seed}, {"strategy", ws.strategy.name()}, {"scoring", j.at("scoring")},
          {"mmr", j.at("mmr")}};
}

bool reusable_selections(const fs::path& dir, const Workspace& ws, std::size_t k) {
  if (!fs::exists(dir / "selections.jsonl") || !fs::exists(dir / "metadata.json")) return false;
  try {
    std::ifstream in(dir / "metadata.json");
    const auto meta = json::parse(in);
    return meta.contains("selection") && meta.at("selection") == selection_settings(ws, k);
  } catch (const json::exception&) {
    return false;
  }
}

void write_metadata(const fs::path& dir, const std::string& command, const Workspace& ws,
                    std::optional<std::size_t> k, const json& extra = json::object()) {
  fs::create_directories(dir);
  json meta = {{"command", command},
               {"code_version", HYDRE_VERSION},
               {"seed", ws.config.seed},
               {"strategy", ws.strategy.name()},
               {"config", config_to_json(ws.config)}};
  if (k) {
    meta["k"] = *k;
    meta["selection"] = selection_settings(ws, *k);
  }
  for (const auto& [key, v] : extra.items()) meta[key] = v;
  std::ofstream(dir / "metadata.json") << meta.dump(2) << '\n';
}

fs::path k_dir(const fs::path& output, std::size_t k, bool sweep) {
  if (!sweep) return output;
  char name[16];
  std::snprintf(name, sizeof name, "k%02zu", k);
  return output / name;
}

std::vector<ExemplarSet> select_all(const Workspace& ws, std::size_t k) {
  auto params = ws.config.strategy_params();
  params.scoring.k = k;
  std::vector<ExemplarSet> sets;
  sets.reserve(ws.queries.size());
  for (const auto& q : ws.queries) {
    sets.push_back(select_exemplars(ws.strategy, q.query_id, *ws.corpus, ws.flat, ws.providers, params));
  }
  return sets;
}

json skip_summary(const std::vector<ExemplarSet>& sets, const RelationOntology& ontology) {
  json skips = json::object();
  for (const auto& s : sets) {
    if (s.skipped.empty()) continue;
    json names = json::array();
    for (RelationId r : s.skipped) names.push_back(ontology.name(r));
    skips[s.query_id] = std::move(names);
  }
  return skips;
}

int cmd_validate(const RunConfig& config, std::ostream& out) {
  const auto ws = load_workspace(config);
  const auto& corpus = *ws.corpus;
  for (const auto& w : corpus.ontology().warnings()) out << "warning: " << w << '\n';
  std::size_t na_queries = 0;
  for (const auto& q : ws.queries) na_queries += q.gold.is_na() ? 1 : 0;
  char frac[32];
  std::snprintf(frac, sizeof frac, "%.4f", na_fraction(corpus.bags()));
  out << "relations: " << corpus.ontology().size() << '\n'
      << "bags: " << corpus.bags().size() << '\n'
      << "sentences: " << corpus.n_sentences() << '\n'
      << "queries: " << ws.queries.size() << " (NA: " << na_queries << ")\n"
      << "NA bag fraction: " << frac << '\n'
      << "score rows: " << (ws.providers.scores ? ws.providers.scores->n_rows() : 0) << '\n'
      << "embeddings: " << (ws.providers.embeddings ? ws.providers.embeddings->size() : 0) << '\n'
      << "OK\n";
  return kExitOk;
}

int cmd_select(const RunConfig& config, const std::vector<std::size_t>& ks, std::ostream& out) {
  const auto ws = load_workspace(config);
  const bool sweep = ks.size() > 1;
  for (std::size_t k : ks) {
    const auto dir = k_dir(config.paths.output, k, sweep);
    fs::create_directories(dir);
    const auto sets = select_all(ws, k);
    records::write_selections(dir / "selections.jsonl", sets, ws.corpus->ontology());
    write_metadata(dir, "select", ws, k, {{"skipped", skip_summary(sets, ws.corpus->ontology())}});
    out << "k=" << k << ": " << sets.size() << " selections -> " << (dir / "selections.jsonl").string()
        << '\n';
  }
  return kExitOk;
}

std::unique_ptr<Backend> default_backend(const RunConfig& config) {
  if (config.mode == JudgeMode::replay) return std::make_unique<FailOnDispatchBackend>();
  if (config.llm_endpoint.empty()) throw ValidationError("live mode needs llm.endpoint in the config");
  return std::make_unique<HttpChatBackend>(config.llm_endpoint, require_env(kLlmApiKeyEnv));
}

int cmd_run(const RunConfig& config, const std::vector<std::size_t>& ks, const Environment& env) {
  if (config.mode == JudgeMode::live) require_env(kLlmApiKeyEnv);
  const auto ws = load_workspace(config);
  const auto& ontology = ws.corpus->ontology();
  auto backend = env.make_backend ? env.make_backend(config) : default_backend(config);
  const auto cache_path =
      config.paths.cache.empty() ? config.paths.output / "cache.jsonl" : config.paths.cache;
  fs::create_directories(config.paths.output);
  ReplayCache cache(cache_path);
  Judge judge(*backend, cache, config.generation, config.mode);

  std::map<std::string, const QueryInstance*> by_id;
  for (const auto& q : ws.queries) by_id[q.query_id] = &q;

  const bool sweep = ks.size() > 1;
  for (std::size_t k : ks) {
    const auto dir = k_dir(config.paths.output, k, sweep);
    fs::create_directories(dir);
    const auto sel_path = dir / "selections.jsonl";
    std::vector<ExemplarSet> sets;
    if (reusable_selections(dir, ws, k)) {
      sets = records::read_selections(sel_path, *ws.corpus);
    } else {
      sets = select_all(ws, k);
      records::write_selections(sel_path, sets, ontology);
    }

    std::vector<PromptJob> jobs;
    for (const auto& set : sets) {
      auto it = by_id.find(set.query_id);
      if (it == by_id.end()) throw ValidationError("selection for unknown query " + set.query_id);
      jobs.push_back({set.query_id, render_prompt(*it->second, set, ontology, config.prompt)});
    }

    if (config.mode == JudgeMode::replay) {
      std::vector<std::string> missing;
      for (const auto& job : jobs) {
        if (!judge.is_cached(job.prompt)) missing.push_back(job.query_id);
      }
      if (!missing.empty()) {
        std::string ids;
        for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
        throw ReplayMiss("queries [" + ids + "] (k=" + std::to_string(k) + ")");
      }
    }

    const auto results = run_batch(jobs, judge, ontology, config.parallelism);
    std::vector<records::PromptRecord> prompts;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      prompts.push_back({jobs[i].query_id, jobs[i].prompt, results[i].prediction.raw_response});
      if (results[i].error) ++failures;
    }
    records::write_prompts(dir / "prompts.jsonl", prompts);
    records::write_predictions(dir / "predictions.jsonl", results, ontology);
    write_metadata(dir, "run", ws, k,
                   {{"mode", config.mode == JudgeMode::live ? "live" : "replay"},
                    {"failures", failures},
                    {"skipped", skip_summary(sets, ontology)}});
    *env.out << "k=" << k << ": " << results.size() << " predictions (" << failures
             << " failed) -> " << (dir / "predictions.jsonl").string() << '\n';
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& config, const std::string& predictions, const std::string& baseline,
             std::ostream& out) {
  const auto ws = load_workspace(config);
  const auto& ontology = ws.corpus->ontology();
  const auto gold = gold_facts(ws.queries);

  auto load_covering = [&](const fs::path& path) {
    auto facts = records::read_predictions(path, ontology);
    std::vector<std::string> missing;
    for (const auto& [id, labels] : gold) {
      if (!facts.contains(id)) missing.push_back(id);
    }
    if (!missing.empty()) {
      throw ValidationError(path.string() + " lacks predictions for " + std::to_string(missing.size()) +
                            " queries (first: " + missing.front() + ")");
    }
    return facts;
  };
  const fs::path pred_path =
      predictions.empty() ? config.paths.output / "predictions.jsonl" : fs::path(predictions);
  const auto pred = load_covering(pred_path);
  const auto report = score(gold, pred, ontology.size());

  std::optional<std::vector<double>> curve;
  if (ws.providers.scores) {
    bool all_scored = true;
    for (const auto& q : ws.queries) all_scored = all_scored && ws.providers.scores->contains(q.query_id);
    if (all_scored) curve = recall_curve(gold, *ws.providers.scores);
  }
  std::optional<McNemarResult> comparison;
  if (!baseline.empty()) {
    const auto base = load_covering(baseline);
    comparison = mcnemar(pair_systems(gold, pred, base));
  }
  std::vector<std::pair<RelationId, RelationId>> pairs;
  for (const auto& [a, b] : config.confusion_pairs) pairs.emplace_back(ontology.id(a), ontology.id(b));
  const auto confusion = confusion_pairs(gold, pred, pairs);

  const auto dir = config.paths.output / "eval";
  write_report(dir, report, ontology, curve, comparison, confusion);
  out << "micro/macro F1: " << summary_cell(report) << '\n';
  if (comparison) {
    out << "McNemar: b=" << comparison->b << " c=" << comparison->c << " p=" << comparison->p_value
        << '\n';
  }
  out << "report -> " << (dir / "report.json").string() << '\n';
  return kExitOk;
}

int cmd_embed(const RunConfig& config, const std::string& target, std::ostream& out) {
  if (config.embedding_endpoint.empty()) {
    throw ValidationError("embed needs embedding_service.endpoint in the config");
  }
  auto ontology = load_ontology(config.paths.ontology, config.na_symbol);
  const auto bags = load_bags(config.paths.bags, ontology);
  const auto queries = load_queries(config.paths.queries, ontology);
  const fs::path target_path =
      !target.empty() ? fs::path(target)
                      : (config.paths.embeddings.empty() ? config.paths.output / "embeddings.jsonl"
                                                         : config.paths.embeddings.front());
  std::vector<fs::path> existing;
  for (const auto& p : config.paths.embeddings) {
    if (fs::exists(p)) existing.push_back(p);
  }
  if (fs::exists(target_path) &&
      std::find(existing.begin(), existing.end(), target_path) == existing.end()) {
    existing.push_back(target_path);
  }
  auto index = existing.empty() ? EmbeddingIndex{} : load_embeddings(existing);

  std::vector<TextItem> items;
  for (const auto& bag : bags) {
    for (const auto& s : bag.sentences) items.push_back({s.sentence_id, s.text});
  }
  for (const auto& q : queries) items.push_back({q.query_id, q.text});

  EmbeddingService service(
      http_embedding_transport(config.embedding_endpoint, require_env(kEmbedApiKeyEnv)));
  if (target_path.has_parent_path()) fs::create_directories(target_path.parent_path());
  const auto added = fetch_embeddings(items, service, index, target_path);
  out << "embedded " << added << " new items -> " << target_path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, const Environment& env) {
  auto& out = *env.out;
  auto& err = *env.err;

  CLI::App app{"Exemplar selection, LLM judging and evaluation for distantly supervised RE", "hydre"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string strategy;
  std::string k_spec;
  std::string mode;
  std::optional<std::size_t> parallelism;
  std::string output;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--strategy", strategy,
                 "hydre | reduced_bag | random_k | topk_sim | mmr | ablation:<name>");
  app.add_option("--k", k_spec, "Candidate count: 5, 1..20 or 1,5,10");
  app.add_option("--mode", mode, "live | replay")->check(CLI::IsMember({"live", "replay"}));
  app.add_option("--parallelism", parallelism, "Concurrent LLM requests");
  app.add_option("--output", output, "Output directory");

  auto* validate = app.add_subcommand("validate", "Load inputs and check cross-references");
  auto* select = app.add_subcommand("select", "Select exemplars for every query");
  auto* runc = app.add_subcommand("run", "Render prompts, query the LLM and parse predictions");
  auto* eval = app.add_subcommand("eval", "Score predictions against gold labels");
  auto* embed = app.add_subcommand("embed", "Fetch missing embeddings from the encoder service");
  std::string predictions, baseline, target;
  eval->add_option("--predictions", predictions, "Predictions file (default: <output>/predictions.jsonl)");
  eval->add_option("--baseline", baseline, "Second predictions file for McNemar comparison");
  embed->add_option("--target", target, "Embedding file to append to");
  for (auto* sub : {validate, select, runc, eval, embed}) sub->fallthrough();

  std::vector<const char*> argv{"hydre"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    RunConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (!strategy.empty()) config.strategy = strategy;
    if (!mode.empty()) config.mode = mode == "live" ? JudgeMode::live : JudgeMode::replay;
    if (parallelism) config.parallelism = *parallelism;
    if (!output.empty()) config.paths.output = output;
    std::vector<std::size_t> ks{config.scoring.k};
    if (!k_spec.empty()) {
      ks = parse_k_list(k_spec);
      config.scoring.k = ks.front();
    }

    if (validate->parsed()) return cmd_validate(config, out);
    if (select->parsed()) return cmd_select(config, ks, out);
    if (runc->parsed()) return cmd_run(config, ks, env);
    if (eval->parsed()) return cmd_eval(config, predictions, baseline, out);
    if (embed->parsed()) return cmd_embed(config, target, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace hydre::cli
