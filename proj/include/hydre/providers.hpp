#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hydre/corpus.hpp"
#include "hydre/error.hpp"
#include "hydre/retry.hpp"

namespace hydre {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Pooling { max, mean };

struct ScoringConfig {
  double w_sim = 1.0;
  double w_conf = 1.0;
  double threshold = 0.5;
  std::size_t k = 5;
  Pooling bag_sim_pooling = Pooling::max;
  std::uint64_t seed = 0;

  void validate() const;
  bool similarity_only() const { return w_conf == 0.0; }
};

// Per-item confidence f(item, r) over the ontology, one row per item id.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> relation_order, std::vector<std::string> ids,
              RowMatrix values);

  const std::vector<std::string>& relation_order() const { return relation_order_; }
  std::size_t n_relations() const { return relation_order_.size(); }
  std::size_t n_rows() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  bool contains(std::string_view id) const { return row_of_.contains(std::string(id)); }
  // Throws ValidationError("missing score row ...") for unknown ids.
  std::size_t row_index(std::string_view id) const;
  auto row(std::string_view id) const { return values_.row(static_cast<Eigen::Index>(row_index(id))); }
  double at(std::string_view id, RelationId r) const { return row(id)(static_cast<Eigen::Index>(r)); }
  const RowMatrix& values() const { return values_; }

  // Checks the manifest order against the ontology.
  void check_order(const RelationOntology& ontology) const;

 private:
  std::vector<std::string> relation_order_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> row_of_;
  RowMatrix values_;
};

// L2-normalized embedding rows keyed by item id.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  explicit EmbeddingIndex(std::size_t dim) : dim_(dim), vectors_(0, static_cast<Eigen::Index>(dim)) {}
  EmbeddingIndex(std::vector<std::string> ids, RowMatrix vectors);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  bool contains(std::string_view id) const { return row_of_.contains(std::string(id)); }
  std::size_t row_index(std::string_view id) const;
  auto vector(std::string_view id) const {
    return vectors_.row(static_cast<Eigen::Index>(row_index(id)));
  }
  const RowMatrix& vectors() const { return vectors_; }

  // Normalizes and appends. Throws on duplicate id, zero vector, or dim mismatch.
  void add(const std::string& id, const Eigen::Ref<const Eigen::RowVectorXd>& v);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> row_of_;
  RowMatrix vectors_;
};

// The precomputed signal sources. Either may be absent depending on the
// strategy (similarity-only runs need no scores, confidence-only runs no embeddings).
struct Providers {
  std::optional<ScoreMatrix> scores;
  std::optional<EmbeddingIndex> embeddings;

  const ScoreMatrix& require_scores() const;
  const EmbeddingIndex& require_embeddings() const;
};

// Cosine mapped from [-1, 1] to [0, 1]: (1 + cos(u, v)) / 2.
template <typename A, typename B>
double cosine_sim(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.size() != v.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine of a zero vector");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return (1.0 + c) / 2.0;
}

double bag_similarity(std::string_view query_id, const Bag& bag, const EmbeddingIndex& embeddings,
                      Pooling pooling = Pooling::max);

// Max-pooled f(s, r) over the bag's sentences.
double bag_confidence(const Bag& bag, RelationId r, const ScoreMatrix& scores);

// w_sim * bag_similarity + w_conf * bag_confidence. A component with zero
// weight is not evaluated, so its provider may be absent.
double combined_bag_score(std::string_view query_id, const Bag& bag, RelationId r,
                          const Providers& providers, const ScoringConfig& config);

// Score file: first record {"relation_order": [...]}, then {"id", "scores"} records.
// Several files are merged; a duplicate id is an error.
ScoreMatrix load_scores(std::span<const std::filesystem::path> paths,
                        const RelationOntology& ontology);
void save_scores(const std::filesystem::path& path, const ScoreMatrix& scores);

EmbeddingIndex load_embeddings(std::span<const std::filesystem::path> paths);
void append_embeddings(const std::filesystem::path& path, const EmbeddingIndex& index,
                       std::span<const std::string> ids);

// Client for a remote text encoder. The transport maps a batch of texts to
// raw vectors; HTTP and mock transports plug in here.
class EmbeddingService {
 public:
  using Transport = std::function<std::vector<std::vector<double>>(std::span<const std::string>)>;

  explicit EmbeddingService(Transport transport, RetryPolicy retry = {})
      : transport_(std::move(transport)), retry_(std::move(retry)) {}

  std::vector<std::vector<double>> embed(std::span<const std::string> texts);
  std::size_t requests() const { return requests_; }

 private:
  Transport transport_;
  RetryPolicy retry_;
  std::size_t requests_ = 0;
};

struct TextItem {
  std::string id;
  std::string text;
};

// Embeds the items not yet present in `index`, adds them (normalized) and
// appends them to `persist_path` when given. Returns the number of new rows.
std::size_t fetch_embeddings(std::span<const TextItem> items, EmbeddingService& service,
                             EmbeddingIndex& index,
                             const std::optional<std::filesystem::path>& persist_path = {});

}  // namespace hydre
