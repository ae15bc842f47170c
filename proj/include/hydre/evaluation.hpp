#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/providers.hpp"

namespace hydre {

// Labels per query id. An empty LabelSet (NA) contributes no facts.
using FactSet = std::map<std::string, LabelSet>;

FactSet gold_facts(std::span<const QueryInstance> queries);

struct RelationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalReport {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  // Unweighted mean over relations with gold support.
  double macro_f1 = 0.0;
  std::vector<RelationMetrics> per_relation;  // ontology order
  std::size_t n_queries = 0;
  std::size_t n_gold_facts = 0;
  std::size_t n_pred_facts = 0;
};

// Pooled (query, relation) facts. Gold queries without a prediction count as
// predicted NA; a prediction for a query not in gold is an error.
EvalReport score(const FactSet& gold, const FactSet& pred, std::size_t n_relations);

// Fraction of gold facts whose relation is in the query's top-k by f(q, .),
// ranked as in select_candidates. 1.0 when there are no gold facts.
double recall_at_k(const FactSet& gold, const ScoreMatrix& scores, std::size_t k);
// recall_at_k for k = 1..|R|.
std::vector<double> recall_curve(const FactSet& gold, const ScoreMatrix& scores);

struct PairedFact {
  std::string query_id;
  RelationId relation;
  bool a_correct;
  bool b_correct;
};

// One record per gold fact: did each system predict it?
std::vector<PairedFact> pair_systems(const FactSet& gold, const FactSet& a, const FactSet& b);

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kExactBinomialBelow = 25;

// Continuity-corrected statistic; p from the exact two-sided binomial when
// b + c < 25, else from the chi-square(1) tail.
McNemarResult mcnemar(std::span<const PairedFact> records);
McNemarResult mcnemar(std::size_t b, std::size_t c);

// P(X <= m) for X ~ Binomial(n, 1/2).
double binomial_half_cdf(std::size_t m, std::size_t n);
// P(X > x) for X ~ chi-square with one degree of freedom.
double chi2_1_sf(double x);

struct ConfusionCell {
  RelationId a;
  RelationId b;
  std::size_t a_as_a = 0;  // gold a, predicted a
  std::size_t a_as_b = 0;  // gold a (not b), predicted b but not a
  std::size_t b_as_a = 0;
  std::size_t b_as_b = 0;
};

std::vector<ConfusionCell> confusion_pairs(const FactSet& gold, const FactSet& pred,
                                           std::span<const std::pair<RelationId, RelationId>> pairs);

// "63/60": micro and macro F1 as rounded percentages.
std::string summary_cell(const EvalReport& report);

struct ReportFiles {
  std::filesystem::path report_json;
  std::filesystem::path per_relation_csv;
  std::optional<std::filesystem::path> confusion_csv;
  std::filesystem::path summary_txt;
};

ReportFiles write_report(const std::filesystem::path& dir, const EvalReport& report,
                         const RelationOntology& ontology,
                         const std::optional<std::vector<double>>& recall_by_k = {},
                         const std::optional<McNemarResult>& comparison = {},
                         std::span<const ConfusionCell> confusion = {});

}  // namespace hydre
