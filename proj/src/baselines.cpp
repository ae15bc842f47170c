#include "hydre/baselines.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "hydre/random.hpp"

namespace hydre {

std::vector<FlatExample> flatten(std::span<const Bag> bags) {
  std::vector<FlatExample> out;
  for (const auto& bag : bags) {
    for (const auto& s : bag.sentences) out.push_back({&s, bag.labels, bag.bag_id});
  }
  return out;
}

std::vector<std::size_t> random_k(std::span<const FlatExample> flat, std::size_t k,
                                  std::mt19937_64& rng) {
  if (k > flat.size()) {
    throw ValidationError("random_k: k=" + std::to_string(k) + " exceeds corpus size " +
                          std::to_string(flat.size()));
  }
  std::vector<std::size_t> pos(flat.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, pos.size() - i);
    std::swap(pos[i], pos[j]);
  }
  pos.resize(k);
  return pos;
}

std::vector<std::size_t> random_k(std::span<const FlatExample> flat, std::size_t k,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_k(flat, k, rng);
}

namespace {

std::vector<double> query_similarities(std::string_view query_id, std::span<const FlatExample> flat,
                                       const EmbeddingIndex& embeddings) {
  const auto q = embeddings.vector(query_id);
  std::vector<double> sims(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    sims[i] = cosine_sim(q, embeddings.vector(flat[i].sentence->sentence_id));
  }
  return sims;
}

std::vector<std::size_t> top_positions(const std::vector<double>& sims, std::size_t k) {
  std::vector<std::size_t> pos(sims.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  auto desc = [&](std::size_t a, std::size_t b) {
    return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
  };
  const auto mid = pos.begin() + static_cast<std::ptrdiff_t>(k);
  std::partial_sort(pos.begin(), mid, pos.end(), desc);
  pos.resize(k);
  return pos;
}

}  // namespace

std::vector<std::size_t> topk_sim(std::string_view query_id, std::span<const FlatExample> flat,
                                  const EmbeddingIndex& embeddings, std::size_t k) {
  if (k > flat.size()) throw ValidationError("topk_sim: k exceeds corpus size");
  return top_positions(query_similarities(query_id, flat, embeddings), k);
}

std::vector<std::size_t> mmr_select(std::string_view query_id, std::span<const FlatExample> flat,
                                    const EmbeddingIndex& embeddings, std::size_t k, double alpha,
                                    std::optional<std::size_t> pool_size) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("mmr alpha must lie in [0, 1]");
  const auto sims = query_similarities(query_id, flat, embeddings);
  const std::size_t pool_n = std::min(pool_size.value_or(flat.size()), flat.size());
  if (k > pool_n) {
    throw ValidationError("mmr_select: k=" + std::to_string(k) + " exceeds pool of " +
                          std::to_string(pool_n));
  }
  const auto pool = top_positions(sims, pool_n);

  std::vector<std::size_t> picked;
  std::vector<bool> used(pool.size(), false);
  // Highest similarity of each pool item to anything already picked.
  std::vector<double> redundancy(pool.size(), -std::numeric_limits<double>::infinity());
  while (picked.size() < k) {
    std::size_t best = pool.size();
    double best_obj = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      const double obj = picked.empty()
                             ? sims[pool[i]]
                             : alpha * sims[pool[i]] - (1.0 - alpha) * redundancy[i];
      if (best == pool.size() || obj > best_obj) {
        best = i;
        best_obj = obj;
      }
    }
    used[best] = true;
    picked.push_back(pool[best]);
    const auto chosen = embeddings.vector(flat[pool[best]].sentence->sentence_id);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      const double s = cosine_sim(chosen, embeddings.vector(flat[pool[i]].sentence->sentence_id));
      redundancy[i] = std::max(redundancy[i], s);
    }
  }
  return picked;
}

ExemplarSet flat_exemplar_set(std::string_view query_id, std::span<const FlatExample> flat,
                              std::span<const std::size_t> picks, std::span<const double> scores) {
  ExemplarSet set;
  set.query_id = std::string(query_id);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto& item = flat[picks[i]];
    Exemplar ex;
    ex.sentences = {*item.sentence};
    ex.labels = item.labels;
    ex.source_bag_id = item.source_bag_id;
    ex.candidate_score = scores.empty() ? 0.0 : scores[i];
    set.exemplars.push_back(std::move(ex));
  }
  return set;
}

namespace {

constexpr std::array<std::pair<Ablation, std::string_view>, 7> kAblationNames{{
    {Ablation::all_relations, "all_relations"},
    {Ablation::flat_retrieval, "flat_retrieval"},
    {Ablation::full_bag, "full_bag"},
    {Ablation::no_sim, "no_sim"},
    {Ablation::no_conf, "no_conf"},
    {Ablation::random_bag_sentence, "random_bag_sentence"},
    {Ablation::no_icl, "no_icl"},
}};

}  // namespace

std::string_view ablation_name(Ablation a) {
  for (const auto& [value, name] : kAblationNames) {
    if (value == a) return name;
  }
  return "?";
}

std::optional<Ablation> parse_ablation(std::string_view name) {
  for (const auto& [value, n] : kAblationNames) {
    if (n == name) return value;
  }
  return std::nullopt;
}

Strategy Strategy::parse(std::string_view name) {
  if (name == "hydre") return {StrategyKind::hydre};
  if (name == "reduced_bag") return {StrategyKind::reduced_bag};
  if (name == "random_k") return {StrategyKind::random_k};
  if (name == "topk_sim") return {StrategyKind::topk_sim};
  if (name == "mmr") return {StrategyKind::mmr};
  constexpr std::string_view prefix = "ablation:";
  if (name.starts_with(prefix)) {
    if (auto a = parse_ablation(name.substr(prefix.size()))) return {StrategyKind::ablation, *a};
    throw ValidationError("unknown ablation variant: " + std::string(name.substr(prefix.size())));
  }
  throw ValidationError("unknown strategy: " + std::string(name));
}

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::hydre: return "hydre";
    case StrategyKind::reduced_bag: return "reduced_bag";
    case StrategyKind::random_k: return "random_k";
    case StrategyKind::topk_sim: return "topk_sim";
    case StrategyKind::mmr: return "mmr";
    case StrategyKind::ablation: return "ablation:" + std::string(ablation_name(ablation));
  }
  return "?";
}

bool Strategy::needs_scores(const ScoringConfig& scoring) const {
  switch (kind) {
    case StrategyKind::random_k:
    case StrategyKind::topk_sim:
    case StrategyKind::mmr:
      return false;
    case StrategyKind::ablation:
      if (ablation == Ablation::no_conf) return false;
      if (ablation == Ablation::no_sim || ablation == Ablation::no_icl ||
          ablation == Ablation::random_bag_sentence) {
        return true;
      }
      return scoring.w_conf > 0.0;
    case StrategyKind::reduced_bag:
      return true;
    default:
      return scoring.w_conf > 0.0;
  }
}

bool Strategy::needs_embeddings(const ScoringConfig& scoring) const {
  switch (kind) {
    case StrategyKind::random_k:
      return false;
    case StrategyKind::topk_sim:
    case StrategyKind::mmr:
      return true;
    case StrategyKind::ablation:
      if (ablation == Ablation::no_icl || ablation == Ablation::random_bag_sentence ||
          ablation == Ablation::no_sim) {
        return false;
      }
      if (ablation == Ablation::no_conf) return true;
      return scoring.w_sim > 0.0;
    default:
      return scoring.w_sim > 0.0;
  }
}

HydreOptions ablation_options(Ablation a, const ScoringConfig& base) {
  HydreOptions o;
  o.scoring = base;
  switch (a) {
    case Ablation::all_relations:
      o.candidates = CandidateMode::all_relations;
      break;
    case Ablation::flat_retrieval:
      o.bags = BagMode::per_sentence;
      break;
    case Ablation::full_bag:
      o.sentences = SentenceMode::full_bag;
      break;
    case Ablation::no_sim:
      o.scoring.w_sim = 0.0;
      o.scoring.w_conf = base.w_conf > 0.0 ? base.w_conf : 1.0;
      break;
    case Ablation::no_conf:
      o.scoring.w_conf = 0.0;
      o.scoring.w_sim = base.w_sim > 0.0 ? base.w_sim : 1.0;
      o.sentences = SentenceMode::random;
      break;
    case Ablation::random_bag_sentence:
      o.bags = BagMode::random;
      o.sentences = SentenceMode::random;
      break;
    case Ablation::no_icl:
      break;
  }
  return o;
}

ExemplarSet select_exemplars(const Strategy& strategy, std::string_view query_id,
                             const Corpus& corpus, std::span<const FlatExample> flat,
                             const Providers& providers, const StrategyParams& params) {
  const auto& scoring = params.scoring;
  switch (strategy.kind) {
    case StrategyKind::hydre:
      return build_exemplar_set(query_id, corpus, providers, {scoring});
    case StrategyKind::reduced_bag: {
      HydreOptions o{scoring};
      o.sentences = SentenceMode::reduced;
      return build_exemplar_set(query_id, corpus, providers, o);
    }
    case StrategyKind::random_k: {
      auto rng = query_rng(scoring.seed, query_id);
      const auto picks = random_k(flat, scoring.k, rng);
      return flat_exemplar_set(query_id, flat, picks);
    }
    case StrategyKind::topk_sim:
    case StrategyKind::mmr: {
      const auto& emb = providers.require_embeddings();
      const auto picks = strategy.kind == StrategyKind::topk_sim
                             ? topk_sim(query_id, flat, emb, scoring.k)
                             : mmr_select(query_id, flat, emb, scoring.k, params.mmr_alpha,
                                          params.mmr_pool);
      std::vector<double> sims;
      for (std::size_t p : picks) {
        sims.push_back(cosine_sim(emb.vector(query_id), emb.vector(flat[p].sentence->sentence_id)));
      }
      return flat_exemplar_set(query_id, flat, picks, sims);
    }
    case StrategyKind::ablation: {
      if (strategy.ablation == Ablation::no_icl) {
        ExemplarSet set;
        set.query_id = std::string(query_id);
        const std::size_t k = std::min(scoring.k, corpus.ontology().size());
        set.candidates = select_candidates(query_id, providers.require_scores(), k);
        set.candidates_only_scope = true;
        return set;
      }
      return build_exemplar_set(query_id, corpus, providers,
                                ablation_options(strategy.ablation, scoring));
    }
  }
  throw ValidationError("unhandled strategy");
}

}  // namespace hydre
