#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/evaluation.hpp"
#include "hydre/judge.hpp"
#include "hydre/jsonl.hpp"
#include "hydre/selection.hpp"

// Line-record formats for persisted run artifacts.
namespace hydre::records {

using jsonl::json;

// {"query_id", "candidates", "skipped", "candidates_only",
//  "exemplars": [{"sentence_id", "source_bag_id", "candidate_relation",
//                 "candidate_score", "labels"}]}
// Passage exemplars additionally carry "sentence_ids".
json exemplar_set_to_json(const ExemplarSet& set, const RelationOntology& ontology);
ExemplarSet exemplar_set_from_json(const json& j, const Corpus& corpus);

void write_selections(const std::filesystem::path& path, std::span<const ExemplarSet> sets,
                      const RelationOntology& ontology);
std::vector<ExemplarSet> read_selections(const std::filesystem::path& path, const Corpus& corpus);

// {"query_id", "relations", "raw"} plus "error" for failed queries.
json prediction_to_json(const BatchRecord& record, const RelationOntology& ontology);
void write_predictions(const std::filesystem::path& path, std::span<const BatchRecord> records,
                       const RelationOntology& ontology);
FactSet read_predictions(const std::filesystem::path& path, const RelationOntology& ontology);

struct PromptRecord {
  std::string query_id;
  std::string prompt;
  std::string response;
};
void write_prompts(const std::filesystem::path& path, std::span<const PromptRecord> prompts);

}  // namespace hydre::records
