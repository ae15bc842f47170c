// Shared test helpers: random synthetic corpora and brute-force reference
// implementations written without the library's selection code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/evaluation.hpp"
#include "hydre/providers.hpp"
#include "hydre/selection.hpp"

#ifndef HYDRE_FIXTURES_DIR
#define HYDRE_FIXTURES_DIR "tests/fixtures"
#endif

namespace testing {

using namespace hydre;

inline std::filesystem::path fixtures() { return HYDRE_FIXTURES_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 salt(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("hydre_test_" + name + "_" + std::to_string(salt()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline SentenceInstance make_sentence(const std::string& id, const std::string& head = "Alice",
                                      const std::string& tail = "Paris") {
  SentenceInstance s;
  s.sentence_id = id;
  s.text = head + " visited " + tail + " .";
  s.head = make_span(s.text, 0, head.size());
  const auto t0 = head.size() + 9;
  s.tail = make_span(s.text, t0, t0 + tail.size());
  return s;
}

inline RelationOntology numbered_ontology(std::size_t n) {
  std::vector<Relation> rels;
  for (std::size_t i = 0; i < n; ++i) {
    rels.push_back({"/rel/r" + std::to_string(i), "definition of relation " + std::to_string(i)});
  }
  return RelationOntology(std::move(rels));
}

// A random corpus plus raw (unnormalized) vectors and scores kept on the side
// for the oracles.
struct Synthetic {
  std::optional<Corpus> corpus;
  Providers providers;
  std::vector<std::string> query_ids;
  std::map<std::string, std::vector<double>> raw_vec;
  std::map<std::string, std::vector<double>> raw_scores;
  std::size_t n_rel = 0;
};

struct SyntheticShape {
  std::size_t max_relations = 10;
  std::size_t max_bags = 30;
  std::size_t max_sentences = 5;
  std::size_t n_queries = 3;
  std::size_t dim = 6;
};

inline Synthetic make_synthetic(std::uint64_t seed, const SyntheticShape& shape = {}) {
  std::mt19937_64 rng(seed);
  auto uni = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Synthetic syn;
  syn.n_rel = uni(2, shape.max_relations);
  const std::size_t n_bags = uni(1, shape.max_bags);
  // Coarse scores and a small vector pool make exact ties common.
  const bool coarse = u01(rng) < 0.3;
  const bool pooled_vectors = u01(rng) < 0.3;
  std::vector<std::vector<double>> pool;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> v(shape.dim);
    for (auto& x : v) x = gauss(rng);
    pool.push_back(v);
  }
  auto score = [&] {
    const double x = u01(rng);
    return coarse ? std::round(x * 4.0) / 4.0 : x;
  };
  auto vec = [&] {
    if (pooled_vectors) return pool[uni(0, pool.size() - 1)];
    std::vector<double> v(shape.dim);
    for (auto& x : v) x = gauss(rng);
    return v;
  };

  std::vector<Bag> bags;
  for (std::size_t b = 0; b < n_bags; ++b) {
    Bag bag;
    bag.bag_id = "B" + std::to_string(b);
    bag.head_entity = "Alice";
    bag.tail_entity = "Paris";
    std::vector<RelationId> labels;
    if (u01(rng) > 0.1) {
      const std::size_t n_labels = uni(1, std::min<std::size_t>(3, syn.n_rel));
      for (std::size_t i = 0; i < n_labels; ++i) labels.push_back(uni(0, syn.n_rel - 1));
    }
    bag.labels = LabelSet(labels);
    const std::size_t n_sent = uni(1, shape.max_sentences);
    for (std::size_t s = 0; s < n_sent; ++s) {
      const auto id = bag.bag_id + "_" + std::to_string(s);
      bag.sentences.push_back(make_sentence(id));
    }
    bags.push_back(std::move(bag));
  }
  for (std::size_t q = 0; q < shape.n_queries; ++q) syn.query_ids.push_back("Q" + std::to_string(q));

  std::vector<std::string> ids;
  for (const auto& bag : bags) {
    for (const auto& s : bag.sentences) ids.push_back(s.sentence_id);
  }
  ids.insert(ids.end(), syn.query_ids.begin(), syn.query_ids.end());

  RowMatrix scores(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(syn.n_rel));
  RowMatrix vectors(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(shape.dim));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& sr = syn.raw_scores[ids[i]];
    for (std::size_t r = 0; r < syn.n_rel; ++r) {
      sr.push_back(score());
      scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = sr.back();
    }
    auto v = vec();
    syn.raw_vec[ids[i]] = v;
    for (std::size_t d = 0; d < shape.dim; ++d) {
      vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[d];
    }
  }

  auto ontology = numbered_ontology(syn.n_rel);
  std::vector<std::string> order;
  for (const auto& r : ontology.relations()) order.push_back(r.name);
  syn.providers.scores.emplace(order, ids, scores);
  syn.providers.embeddings.emplace(ids, vectors);
  syn.corpus.emplace(std::move(ontology), std::move(bags));
  return syn;
}

// ---- brute-force references -------------------------------------------------

inline double oracle_cos01(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double c = dot / std::sqrt(na * nb);
  c = std::max(-1.0, std::min(1.0, c));
  return (1.0 + c) / 2.0;
}

// Sort all relations, then truncate: (score desc, index asc).
inline std::vector<RelationId> oracle_topk(const std::vector<double>& row, std::size_t k) {
  std::vector<std::pair<double, RelationId>> all;
  for (RelationId r = 0; r < row.size(); ++r) all.push_back({-row[r], r});
  std::sort(all.begin(), all.end());
  std::vector<RelationId> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

inline double oracle_bag_score(const Synthetic& syn, const std::string& qid, const Bag& bag,
                               RelationId r, double w_sim, double w_conf) {
  double sim = -1.0, conf = -1.0;
  for (const auto& s : bag.sentences) {
    sim = std::max(sim, oracle_cos01(syn.raw_vec.at(qid), syn.raw_vec.at(s.sentence_id)));
    conf = std::max(conf, syn.raw_scores.at(s.sentence_id)[r]);
  }
  double total = 0.0;
  if (w_sim > 0.0) total += w_sim * sim;
  if (w_conf > 0.0) total += w_conf * conf;
  return total;
}

// Exhaustive scan over every bag; the first maximum wins.
inline std::optional<std::size_t> oracle_bag(const Synthetic& syn, const std::string& qid,
                                             RelationId r, double w_sim = 1.0, double w_conf = 1.0) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  const auto& bags = syn.corpus->bags();
  for (std::size_t b = 0; b < bags.size(); ++b) {
    if (!bags[b].labels.contains(r)) continue;
    const double s = oracle_bag_score(syn, qid, bags[b], r, w_sim, w_conf);
    if (!best || s > best_score) {
      best = b;
      best_score = s;
    }
  }
  return best;
}

// Two passes: the maximum coverage, then the first sentence with maximum sum among those.
inline std::size_t oracle_sentence(const std::map<std::string, std::vector<double>>& scores,
                                   const Bag& bag, double t) {
  std::vector<std::size_t> cov(bag.sentences.size(), 0);
  std::vector<double> sum(bag.sentences.size(), 0.0);
  for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
    const auto& row = scores.at(bag.sentences[i].sentence_id);
    for (RelationId r : bag.labels) {
      if (row[r] > t) ++cov[i];
      sum[i] += row[r];
    }
  }
  const std::size_t max_cov = *std::max_element(cov.begin(), cov.end());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
    if (cov[i] != max_cov) continue;
    if (!best || sum[i] > sum[*best]) best = i;
  }
  return *best;
}

struct OracleExemplar {
  RelationId relation;
  std::string bag_id;
  std::string sentence_id;
  double score;
};

struct OracleSelection {
  std::vector<RelationId> candidates;
  std::vector<OracleExemplar> exemplars;  // final prompt order
  std::vector<RelationId> skipped;
};

// Three-stage selection with default weights and coverage-based sentence choice.
inline OracleSelection oracle_pipeline(const Synthetic& syn, const std::string& qid, std::size_t k,
                                         double t) {
  OracleSelection out;
  const auto& row = syn.raw_scores.at(qid);
  out.candidates = oracle_topk(row, std::min(k, syn.n_rel));
  std::vector<OracleExemplar> picked;
  for (RelationId r : out.candidates) {
    const auto b = oracle_bag(syn, qid, r);
    if (!b) {
      out.skipped.push_back(r);
      continue;
    }
    const auto& bag = syn.corpus->bag(*b);
    const auto s = oracle_sentence(syn.raw_scores, bag, t);
    picked.push_back({r, bag.bag_id, bag.sentences[s].sentence_id, row[r]});
  }
  // Ascending by f(q, r); among equal scores the lower-ranked candidate goes first.
  std::vector<std::size_t> idx(picked.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (picked[a].score != picked[b].score) return picked[a].score < picked[b].score;
    return a > b;
  });
  for (std::size_t i : idx) out.exemplars.push_back(picked[i]);
  return out;
}

inline bool matches_oracle(const ExemplarSet& got, const OracleSelection& want, std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (got.candidates.size() != want.candidates.size()) return fail("candidate count");
  for (std::size_t i = 0; i < got.candidates.size(); ++i) {
    if (got.candidates[i].relation != want.candidates[i]) return fail("candidate order");
  }
  if (got.skipped != want.skipped) return fail("skipped");
  if (got.exemplars.size() != want.exemplars.size()) return fail("exemplar count");
  for (std::size_t i = 0; i < got.exemplars.size(); ++i) {
    const auto& g = got.exemplars[i];
    const auto& w = want.exemplars[i];
    if (g.candidate_relation != w.relation) return fail("exemplar relation at " + std::to_string(i));
    if (g.source_bag_id != w.bag_id) return fail("bag at " + std::to_string(i));
    if (g.sentences.size() != 1 || g.sentences[0].sentence_id != w.sentence_id) {
      return fail("sentence at " + std::to_string(i));
    }
    if (std::abs(g.candidate_score - w.score) > 1e-12) return fail("score at " + std::to_string(i));
  }
  return true;
}

// Fact-by-fact counting straight from the definitions.
struct OracleCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

inline std::vector<OracleCounts> oracle_counts(const FactSet& gold, const FactSet& pred, std::size_t n_rel) {
  std::vector<OracleCounts> c(n_rel);
  for (const auto& [q, g] : gold) {
    auto it = pred.find(q);
    const LabelSet p = it == pred.end() ? LabelSet{} : it->second;
    for (RelationId r = 0; r < n_rel; ++r) {
      const bool in_g = g.contains(r), in_p = p.contains(r);
      if (in_g && in_p) ++c[r].tp;
      if (!in_g && in_p) ++c[r].fp;
      if (in_g && !in_p) ++c[r].fn;
    }
  }
  return c;
}

// P(X <= m), X ~ Binomial(n, 1/2), by Pascal's triangle in exact integers.
inline double oracle_binomial_half_cdf(std::size_t m, std::size_t n) {
  std::vector<long double> row{1.0L};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> next(row.size() + 1, 0.0L);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  long double acc = 0.0L;
  for (std::size_t j = 0; j <= m && j < row.size(); ++j) acc += row[j];
  return static_cast<double>(acc / std::pow(2.0L, static_cast<long double>(n)));
}

inline FactSet random_facts(std::mt19937_64& rng, const std::vector<std::string>& qids, std::size_t n_rel,
                            double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FactSet out;
  for (const auto& q : qids) {
    std::vector<RelationId> rs;
    for (RelationId r = 0; r < n_rel; ++r) {
      if (u(rng) < density) rs.push_back(r);
    }
    out[q] = LabelSet(rs);
  }
  return out;
}

}  // namespace testing
