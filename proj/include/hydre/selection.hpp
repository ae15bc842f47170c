#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/providers.hpp"

namespace hydre {

struct Candidate {
  RelationId relation;
  double score;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Exemplar {
  // One sentence normally; several for whole-bag and reduced-bag exemplars.
  std::vector<SentenceInstance> sentences;
  // The source bag's full labelset, never relabeled.
  LabelSet labels;
  std::string source_bag_id;
  std::optional<RelationId> candidate_relation;
  // f(q, candidate_relation); bag similarity in similarity-only mode.
  double candidate_score = 0.0;

  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

struct ExemplarSet {
  std::string query_id;
  // Least relevant first, so the most relevant exemplar sits next to the query.
  std::vector<Exemplar> exemplars;
  // Stage-1 output in rank order. Empty for flat-corpus baselines.
  std::vector<Candidate> candidates;
  // Candidates dropped because no training bag carries them.
  std::vector<RelationId> skipped;
  // List only the candidate relations in the prompt (zero-shot ablation).
  bool candidates_only_scope = false;

  friend bool operator==(const ExemplarSet&, const ExemplarSet&) = default;
};

class NoBagForRelation : public Error {
 public:
  explicit NoBagForRelation(RelationId r)
      : Error("no training bag carries relation " + std::to_string(r)), relation(r) {}
  RelationId relation;
};

// All relations by descending score; ties go to the lower ontology index.
std::vector<RelationId> rank_relations(const Eigen::Ref<const Eigen::RowVectorXd>& scores);

// Top-k relations by f(q, r), descending. Requires 1 <= k <= |R|.
std::vector<Candidate> select_candidates(std::string_view query_id, const ScoreMatrix& scores,
                                         std::size_t k);

// Position (in corpus order) of the bag carrying r that maximizes
// combined_bag_score; the earliest bag wins ties.
std::size_t select_bag(std::string_view query_id, RelationId r, const Corpus& corpus,
                       const Providers& providers, const ScoringConfig& config);

// Index of the sentence with maximum coverage, then maximum aggregate
// confidence over the bag's labels; earliest sentence wins ties.
std::size_t select_sentence(const Bag& bag, const ScoreMatrix& scores, double threshold);

// For each bag label (ontology order), the index of the sentence with highest f(s, r).
std::vector<std::pair<RelationId, std::size_t>> reduce_bag(const Bag& bag, const ScoreMatrix& scores);

enum class CandidateMode { top_k, all_relations };
enum class BagMode { scored, random, per_sentence };
enum class SentenceMode { coverage, random, full_bag, reduced };

struct HydreOptions {
  ScoringConfig scoring;
  CandidateMode candidates = CandidateMode::top_k;
  BagMode bags = BagMode::scored;
  SentenceMode sentences = SentenceMode::coverage;
};

// Candidate relations when no confidence model is in play: walk bags by
// descending similarity to the query and collect their labels until k
// distinct relations are found.
std::vector<Candidate> similarity_candidates(std::string_view query_id, const Corpus& corpus,
                                             const EmbeddingIndex& embeddings,
                                             const ScoringConfig& config);

// Three-stage exemplar selection for one query.
ExemplarSet build_exemplar_set(std::string_view query_id, const Corpus& corpus,
                               const Providers& providers, const HydreOptions& options = {});

}  // namespace hydre
