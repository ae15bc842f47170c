#include "hydre/selection.hpp"

#include <algorithm>
#include <numeric>

#include "hydre/random.hpp"

namespace hydre {

std::vector<RelationId> rank_relations(const Eigen::Ref<const Eigen::RowVectorXd>& scores) {
  std::vector<RelationId> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), RelationId{0});
  std::stable_sort(order.begin(), order.end(), [&](RelationId a, RelationId b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  return order;
}

std::vector<Candidate> select_candidates(std::string_view query_id, const ScoreMatrix& scores,
                                         std::size_t k) {
  if (k < 1 || k > scores.n_relations()) {
    throw ValidationError("k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(scores.n_relations()) + "]");
  }
  const Eigen::RowVectorXd row = scores.row(query_id);
  auto order = rank_relations(row);
  std::vector<Candidate> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({order[i], row(static_cast<Eigen::Index>(order[i]))});
  }
  return out;
}

std::size_t select_bag(std::string_view query_id, RelationId r, const Corpus& corpus,
                       const Providers& providers, const ScoringConfig& config) {
  const auto& members = corpus.bags_with(r);
  if (members.empty()) throw NoBagForRelation(r);
  std::size_t best = members.front();
  double best_score = combined_bag_score(query_id, corpus.bag(best), r, providers, config);
  for (std::size_t i = 1; i < members.size(); ++i) {
    const double s = combined_bag_score(query_id, corpus.bag(members[i]), r, providers, config);
    if (s > best_score) {
      best_score = s;
      best = members[i];
    }
  }
  return best;
}

std::size_t select_sentence(const Bag& bag, const ScoreMatrix& scores, double threshold) {
  std::size_t best = 0;
  std::size_t best_coverage = 0;
  double best_sum = 0.0;
  for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
    const auto row = scores.row(bag.sentences[i].sentence_id);
    std::size_t coverage = 0;
    double sum = 0.0;
    for (RelationId r : bag.labels) {
      const double f = row(static_cast<Eigen::Index>(r));
      if (f > threshold) ++coverage;
      sum += f;
    }
    if (i == 0 || coverage > best_coverage || (coverage == best_coverage && sum > best_sum)) {
      best = i;
      best_coverage = coverage;
      best_sum = sum;
    }
  }
  return best;
}

std::vector<std::pair<RelationId, std::size_t>> reduce_bag(const Bag& bag, const ScoreMatrix& scores) {
  std::vector<std::pair<RelationId, std::size_t>> out;
  for (RelationId r : bag.labels) {
    std::size_t best = 0;
    double best_f = scores.at(bag.sentences[0].sentence_id, r);
    for (std::size_t i = 1; i < bag.sentences.size(); ++i) {
      const double f = scores.at(bag.sentences[i].sentence_id, r);
      if (f > best_f) {
        best_f = f;
        best = i;
      }
    }
    out.emplace_back(r, best);
  }
  return out;
}

std::vector<Candidate> similarity_candidates(std::string_view query_id, const Corpus& corpus,
                                             const EmbeddingIndex& embeddings,
                                             const ScoringConfig& config) {
  const auto& bags = corpus.bags();
  std::vector<double> sims(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    sims[b] = bag_similarity(query_id, bags[b], embeddings, config.bag_sim_pooling);
  }
  std::vector<std::size_t> order(bags.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

  const std::size_t k = std::min(config.k, corpus.ontology().size());
  std::vector<Candidate> out;
  std::vector<bool> taken(corpus.ontology().size(), false);
  for (std::size_t b : order) {
    for (RelationId r : bags[b].labels) {
      if (out.size() == k) return out;
      if (taken[r]) continue;
      taken[r] = true;
      out.push_back({r, sims[b]});
    }
  }
  return out;
}

namespace {

struct Pick {
  std::size_t bag;
  std::vector<std::size_t> sentences;
  double similarity = 0.0;
};

// Stage 2 and 3 replaced by a scan over individual sentences of bags carrying r.
Pick pick_sentence_directly(std::string_view query_id, RelationId r, const Corpus& corpus,
                            const Providers& providers, const ScoringConfig& config) {
  const auto& members = corpus.bags_with(r);
  if (members.empty()) throw NoBagForRelation(r);
  Pick best{members.front(), {0}, 0.0};
  double best_score = -1.0;
  for (std::size_t b : members) {
    const auto& bag = corpus.bag(b);
    for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
      const auto& id = bag.sentences[i].sentence_id;
      double score = 0.0;
      double sim = 0.0;
      if (config.w_sim > 0.0) {
        const auto& emb = providers.require_embeddings();
        sim = cosine_sim(emb.vector(query_id), emb.vector(id));
        score += config.w_sim * sim;
      }
      if (config.w_conf > 0.0) score += config.w_conf * providers.require_scores().at(id, r);
      if (score > best_score) {
        best_score = score;
        best = {b, {i}, sim};
      }
    }
  }
  return best;
}

}  // namespace

ExemplarSet build_exemplar_set(std::string_view query_id, const Corpus& corpus,
                               const Providers& providers, const HydreOptions& options) {
  const auto& config = options.scoring;
  config.validate();
  const bool sim_only = config.similarity_only();
  const std::size_t n_rel = corpus.ontology().size();
  if (n_rel == 0) throw ValidationError("empty ontology");

  ExemplarSet set;
  set.query_id = std::string(query_id);

  const std::size_t k =
      options.candidates == CandidateMode::all_relations ? n_rel : std::min(config.k, n_rel);
  const bool have_query_scores = providers.scores && providers.scores->contains(query_id);
  if (sim_only && !have_query_scores) {
    ScoringConfig c = config;
    c.k = k;
    set.candidates = similarity_candidates(query_id, corpus, providers.require_embeddings(), c);
  } else {
    set.candidates = select_candidates(query_id, providers.require_scores(), k);
  }

  auto rng = query_rng(config.seed, query_id);
  for (const auto& cand : set.candidates) {
    const RelationId r = cand.relation;
    Pick pick;
    try {
      if (options.bags == BagMode::per_sentence) {
        pick = pick_sentence_directly(query_id, r, corpus, providers, config);
      } else if (options.bags == BagMode::random) {
        const auto& members = corpus.bags_with(r);
        if (members.empty()) throw NoBagForRelation(r);
        pick.bag = members[uniform_index(rng, members.size())];
      } else {
        pick.bag = select_bag(query_id, r, corpus, providers, config);
      }
    } catch (const NoBagForRelation&) {
      set.skipped.push_back(r);
      continue;
    }

    const Bag& bag = corpus.bag(pick.bag);
    if (options.bags != BagMode::per_sentence) {
      auto mode = options.sentences;
      if (sim_only && mode == SentenceMode::coverage) mode = SentenceMode::random;
      switch (mode) {
        case SentenceMode::coverage:
          pick.sentences = {select_sentence(bag, providers.require_scores(), config.threshold)};
          break;
        case SentenceMode::random:
          pick.sentences = {uniform_index(rng, bag.sentences.size())};
          break;
        case SentenceMode::full_bag:
          pick.sentences.resize(bag.sentences.size());
          std::iota(pick.sentences.begin(), pick.sentences.end(), std::size_t{0});
          break;
        case SentenceMode::reduced:
          for (const auto& [rel, s] : reduce_bag(bag, providers.require_scores())) {
            if (std::find(pick.sentences.begin(), pick.sentences.end(), s) == pick.sentences.end()) {
              pick.sentences.push_back(s);
            }
          }
          break;
      }
      if (sim_only) {
        pick.similarity =
            bag_similarity(query_id, bag, providers.require_embeddings(), config.bag_sim_pooling);
      }
    }

    Exemplar ex;
    for (std::size_t s : pick.sentences) ex.sentences.push_back(bag.sentences[s]);
    ex.labels = bag.labels;
    ex.source_bag_id = bag.bag_id;
    ex.candidate_relation = r;
    ex.candidate_score = sim_only ? pick.similarity : cand.score;
    set.exemplars.push_back(std::move(ex));
  }

  // Candidates arrive best-first; reversing gives ascending relevance with the
  // rank tie-break preserved. Similarity-only mode re-sorts on bag similarity.
  std::reverse(set.exemplars.begin(), set.exemplars.end());
  if (sim_only) {
    std::stable_sort(set.exemplars.begin(), set.exemplars.end(),
                     [](const Exemplar& a, const Exemplar& b) {
                       return a.candidate_score < b.candidate_score;
                     });
  }
  return set;
}

}  // namespace hydre
