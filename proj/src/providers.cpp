#include "hydre/providers.hpp"

#include <algorithm>
#include <utility>

#include "hydre/jsonl.hpp"

namespace hydre {

using jsonl::json;

void ScoringConfig::validate() const {
  if (!(w_sim >= 0.0) || !(w_conf >= 0.0)) throw ValidationError("scoring weights must be >= 0");
  if (!(w_sim + w_conf > 0.0)) throw ValidationError("w_sim + w_conf must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("threshold must lie in (0, 1)");
  if (k < 1) throw ValidationError("k must be >= 1");
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> relation_order, std::vector<std::string> ids,
                         RowMatrix values)
    : relation_order_(std::move(relation_order)), ids_(std::move(ids)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.rows()) != ids_.size()) {
    throw ValidationError("score matrix row count does not match id count");
  }
  if (static_cast<std::size_t>(values_.cols()) != relation_order_.size() && !ids_.empty()) {
    throw ValidationError("score vector length " + std::to_string(values_.cols()) +
                          " != relation count " + std::to_string(relation_order_.size()));
  }
  values_.conservativeResize(values_.rows(), static_cast<Eigen::Index>(relation_order_.size()));
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!row_of_.emplace(ids_[i], i).second) throw ValidationError("duplicate score row: " + ids_[i]);
    const auto row = values_.row(static_cast<Eigen::Index>(i));
    if (!((row.array() >= 0.0).all() && (row.array() <= 1.0).all())) {
      throw ValidationError("score outside [0,1] for " + ids_[i]);
    }
  }
}

std::size_t ScoreMatrix::row_index(std::string_view id) const {
  auto it = row_of_.find(std::string(id));
  if (it == row_of_.end()) throw ValidationError("missing score row: " + std::string(id));
  return it->second;
}

void ScoreMatrix::check_order(const RelationOntology& ontology) const {
  bool same = relation_order_.size() == ontology.size();
  for (std::size_t r = 0; same && r < ontology.size(); ++r) {
    same = relation_order_[r] == ontology.name(r);
  }
  if (!same) throw ValidationError("score manifest relation_order differs from ontology order");
}

EmbeddingIndex::EmbeddingIndex(std::vector<std::string> ids, RowMatrix vectors)
    : dim_(static_cast<std::size_t>(vectors.cols())), vectors_(0, vectors.cols()) {
  if (static_cast<std::size_t>(vectors.rows()) != ids.size()) {
    throw ValidationError("embedding row count does not match id count");
  }
  vectors_.resize(vectors.rows(), vectors.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = vectors.row(static_cast<Eigen::Index>(i));
    const double n = v.norm();
    if (n == 0.0 || !std::isfinite(n)) throw ValidationError("zero or non-finite embedding: " + ids[i]);
    vectors_.row(static_cast<Eigen::Index>(i)) = v / n;
    if (!row_of_.emplace(ids[i], i).second) throw ValidationError("duplicate embedding: " + ids[i]);
  }
  ids_ = std::move(ids);
}

std::size_t EmbeddingIndex::row_index(std::string_view id) const {
  auto it = row_of_.find(std::string(id));
  if (it == row_of_.end()) throw ValidationError("missing embedding: " + std::string(id));
  return it->second;
}

void EmbeddingIndex::add(const std::string& id, const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  if (ids_.empty() && dim_ == 0) {
    dim_ = static_cast<std::size_t>(v.size());
    vectors_.resize(0, v.size());
  }
  if (static_cast<std::size_t>(v.size()) != dim_) {
    throw ValidationError("embedding dim " + std::to_string(v.size()) + " inconsistent with index dim " +
                          std::to_string(dim_));
  }
  const double n = v.norm();
  if (n == 0.0 || !std::isfinite(n)) throw ValidationError("zero or non-finite embedding: " + id);
  if (row_of_.contains(id)) throw ValidationError("duplicate embedding: " + id);
  const auto row = vectors_.rows();
  vectors_.conservativeResize(row + 1, Eigen::NoChange);
  vectors_.row(row) = v / n;
  row_of_.emplace(id, ids_.size());
  ids_.push_back(id);
}

const ScoreMatrix& Providers::require_scores() const {
  if (!scores) throw ValidationError("this strategy needs confidence scores but none are loaded");
  return *scores;
}

const EmbeddingIndex& Providers::require_embeddings() const {
  if (!embeddings) throw ValidationError("this strategy needs embeddings but none are loaded");
  return *embeddings;
}

double bag_similarity(std::string_view query_id, const Bag& bag, const EmbeddingIndex& embeddings,
                      Pooling pooling) {
  const auto q = embeddings.vector(query_id);
  double best = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
    const double s = cosine_sim(q, embeddings.vector(bag.sentences[i].sentence_id));
    best = i == 0 ? s : std::max(best, s);
    sum += s;
  }
  return pooling == Pooling::max ? best : sum / static_cast<double>(bag.sentences.size());
}

double bag_confidence(const Bag& bag, RelationId r, const ScoreMatrix& scores) {
  double best = 0.0;
  for (std::size_t i = 0; i < bag.sentences.size(); ++i) {
    const double s = scores.at(bag.sentences[i].sentence_id, r);
    best = i == 0 ? s : std::max(best, s);
  }
  return best;
}

double combined_bag_score(std::string_view query_id, const Bag& bag, RelationId r,
                          const Providers& providers, const ScoringConfig& config) {
  double score = 0.0;
  if (config.w_sim > 0.0) {
    score += config.w_sim *
             bag_similarity(query_id, bag, providers.require_embeddings(), config.bag_sim_pooling);
  }
  if (config.w_conf > 0.0) {
    score += config.w_conf * bag_confidence(bag, r, providers.require_scores());
  }
  return score;
}

ScoreMatrix load_scores(std::span<const std::filesystem::path> paths,
                        const RelationOntology& ontology) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::vector<std::string> order;
  for (const auto& path : paths) {
    bool have_manifest = false;
    jsonl::for_each(path, [&](const json& j, std::size_t) {
      if (!have_manifest) {
        if (!j.contains("relation_order")) {
          throw ValidationError("score file must start with a relation_order manifest");
        }
        auto file_order = j.at("relation_order").get<std::vector<std::string>>();
        if (order.empty()) {
          order = std::move(file_order);
          ScoreMatrix(order, {}, {}).check_order(ontology);
        } else if (file_order != order) {
          throw ValidationError("score files disagree on relation_order");
        }
        have_manifest = true;
        return;
      }
      const auto id = j.at("id").get<std::string>();
      const auto scores = j.at("scores").get<std::vector<double>>();
      if (scores.size() != order.size()) {
        throw ValidationError("score vector for " + id + " has length " +
                              std::to_string(scores.size()) + ", expected " +
                              std::to_string(order.size()));
      }
      for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("score outside [0,1] for " + id);
      }
      ids.push_back(id);
      flat.insert(flat.end(), scores.begin(), scores.end());
    });
    if (!have_manifest) throw ValidationError(path.string() + ": missing relation_order manifest");
  }
  const auto rows = static_cast<Eigen::Index>(ids.size());
  const auto cols = static_cast<Eigen::Index>(order.size());
  RowMatrix values = Eigen::Map<const RowMatrix>(flat.data(), rows, cols);
  return ScoreMatrix(std::move(order), std::move(ids), std::move(values));
}

void save_scores(const std::filesystem::path& path, const ScoreMatrix& scores) {
  jsonl::Writer out(path);
  out.write({{"relation_order", scores.relation_order()}});
  for (std::size_t i = 0; i < scores.n_rows(); ++i) {
    const auto row = scores.values().row(static_cast<Eigen::Index>(i));
    out.write({{"id", scores.ids()[i]}, {"scores", std::vector<double>(row.begin(), row.end())}});
  }
}

EmbeddingIndex load_embeddings(std::span<const std::filesystem::path> paths) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::size_t dim = 0;
  for (const auto& path : paths) {
    jsonl::for_each(path, [&](const json& j, std::size_t) {
      const auto id = j.at("id").get<std::string>();
      const auto v = j.at("vector").get<std::vector<double>>();
      if (v.empty()) throw ValidationError("empty vector for " + id);
      if (dim == 0) dim = v.size();
      if (v.size() != dim) {
        throw ValidationError("vector for " + id + " has dim " + std::to_string(v.size()) +
                              ", expected " + std::to_string(dim));
      }
      ids.push_back(id);
      flat.insert(flat.end(), v.begin(), v.end());
    });
  }
  const auto rows = static_cast<Eigen::Index>(ids.size());
  RowMatrix vectors = Eigen::Map<const RowMatrix>(flat.data(), rows, static_cast<Eigen::Index>(dim));
  return EmbeddingIndex(std::move(ids), std::move(vectors));
}

void append_embeddings(const std::filesystem::path& path, const EmbeddingIndex& index,
                       std::span<const std::string> ids) {
  jsonl::Writer out(path, /*append=*/true);
  for (const auto& id : ids) {
    const auto v = index.vector(id);
    out.write({{"id", id}, {"vector", std::vector<double>(v.begin(), v.end())}});
  }
}

std::vector<std::vector<double>> EmbeddingService::embed(std::span<const std::string> texts) {
  auto vectors = with_retries(retry_, [&] {
    ++requests_;
    return transport_(texts);
  });
  if (vectors.size() != texts.size()) {
    throw RuntimeFailure("embedding service returned " + std::to_string(vectors.size()) +
                         " vectors for " + std::to_string(texts.size()) + " texts");
  }
  return vectors;
}

std::size_t fetch_embeddings(std::span<const TextItem> items, EmbeddingService& service,
                             EmbeddingIndex& index,
                             const std::optional<std::filesystem::path>& persist_path) {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  for (const auto& item : items) {
    if (index.contains(item.id)) continue;
    if (std::find(ids.begin(), ids.end(), item.id) != ids.end()) continue;
    ids.push_back(item.id);
    texts.push_back(item.text);
  }
  if (ids.empty()) return 0;

  const auto vectors = service.embed(texts);
  const std::size_t dim = index.size() > 0 || index.dim() > 0 ? index.dim() : vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw ValidationError("embedding service returned dim " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim));
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    index.add(ids[i], Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(),
                                                           static_cast<Eigen::Index>(dim)));
  }
  if (persist_path) append_embeddings(*persist_path, index, ids);
  return ids.size();
}

}  // namespace hydre
