#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/providers.hpp"
#include "hydre/selection.hpp"

namespace hydre {

// A training sentence carrying all labels of the bag it came from.
struct FlatExample {
  const SentenceInstance* sentence = nullptr;
  LabelSet labels;
  std::string source_bag_id;
};

// One entry per (bag, sentence), corpus order. Points into `bags`, which must outlive the result.
std::vector<FlatExample> flatten(std::span<const Bag> bags);

// Uniform sample of k positions without replacement, in draw order.
std::vector<std::size_t> random_k(std::span<const FlatExample> flat, std::size_t k,
                                  std::mt19937_64& rng);
std::vector<std::size_t> random_k(std::span<const FlatExample> flat, std::size_t k,
                                  std::uint64_t seed);

// k most query-similar positions, descending; earlier items win ties.
std::vector<std::size_t> topk_sim(std::string_view query_id, std::span<const FlatExample> flat,
                                  const EmbeddingIndex& embeddings, std::size_t k);

inline constexpr double kDefaultMmrAlpha = 0.3;
inline constexpr std::size_t kDefaultMmrPool = 100;

// Greedy maximal marginal relevance over the pool_size most query-similar
// items (all items when pool_size is empty). Positions in selection order.
std::vector<std::size_t> mmr_select(std::string_view query_id, std::span<const FlatExample> flat,
                                    const EmbeddingIndex& embeddings, std::size_t k,
                                    double alpha = kDefaultMmrAlpha,
                                    std::optional<std::size_t> pool_size = kDefaultMmrPool);

// Wraps flat picks as an exemplar set in pick order. `scores` become candidate_score.
ExemplarSet flat_exemplar_set(std::string_view query_id, std::span<const FlatExample> flat,
                              std::span<const std::size_t> picks,
                              std::span<const double> scores = {});

enum class StrategyKind { hydre, reduced_bag, random_k, topk_sim, mmr, ablation };

enum class Ablation {
  all_relations,
  flat_retrieval,
  full_bag,
  no_sim,
  no_conf,
  random_bag_sentence,
  no_icl,
};

struct Strategy {
  StrategyKind kind = StrategyKind::hydre;
  Ablation ablation = Ablation::all_relations;

  // "hydre", "reduced_bag", "random_k", "topk_sim", "mmr" or "ablation:<name>".
  static Strategy parse(std::string_view name);
  std::string name() const;

  // Whether every query and training sentence must have a score row.
  bool needs_scores(const ScoringConfig& scoring) const;
  // Strategies that read embeddings.
  bool needs_embeddings(const ScoringConfig& scoring) const;
};

std::string_view ablation_name(Ablation a);
std::optional<Ablation> parse_ablation(std::string_view name);

// Pipeline options for an ablation variant, derived from the base scoring
// config. no_icl has no selection stages; its options describe stage 1 only.
HydreOptions ablation_options(Ablation a, const ScoringConfig& base);

struct StrategyParams {
  ScoringConfig scoring;
  double mmr_alpha = kDefaultMmrAlpha;
  std::optional<std::size_t> mmr_pool = kDefaultMmrPool;
};

// Runs any strategy for one query. `flat` is only read by flat-corpus baselines.
ExemplarSet select_exemplars(const Strategy& strategy, std::string_view query_id,
                             const Corpus& corpus, std::span<const FlatExample> flat,
                             const Providers& providers, const StrategyParams& params);

}  // namespace hydre
