#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hydre {

// Position of a relation in the ontology. Every score vector is indexed by it.
using RelationId = std::size_t;

// A set of ontology relations kept sorted by RelationId. The empty set is NA.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<RelationId> ids);

  static LabelSet na() { return {}; }

  bool is_na() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  bool contains(RelationId r) const;
  const std::vector<RelationId>& relations() const { return ids_; }

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  LabelSet merged(const LabelSet& other) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<RelationId> ids_;
};

struct Relation {
  std::string name;
  std::string definition;
};

inline constexpr std::string_view kDefaultNaDefinition =
    "no relation from the set exists between the given entity pair";

class RelationOntology {
 public:
  RelationOntology() = default;
  RelationOntology(std::vector<Relation> relations, std::string na_symbol = "NA",
                   std::string na_definition = std::string(kDefaultNaDefinition));
  RelationOntology(std::initializer_list<Relation> relations, std::string na_symbol = "NA")
      : RelationOntology(std::vector<Relation>(relations), std::move(na_symbol)) {}

  std::size_t size() const { return relations_.size(); }
  const Relation& operator[](RelationId r) const { return relations_.at(r); }
  const std::vector<Relation>& relations() const { return relations_; }
  const std::string& name(RelationId r) const { return relations_.at(r).name; }

  const std::string& na_symbol() const { return na_symbol_; }
  const std::string& na_definition() const { return na_definition_; }

  std::optional<RelationId> find(std::string_view name) const;
  // Throws ValidationError naming the relation when it is unknown.
  RelationId id(std::string_view name) const;

  // Builds a label set from names. `allow_na` admits the NA symbol, but only
  // as a singleton.
  LabelSet labels(std::span<const std::string> names, bool allow_na = true) const;
  std::vector<std::string> names(const LabelSet& labels) const;

  // Names that are a substring of another name; matching by exact occurrence
  // is ambiguous for these.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<Relation> relations_;
  std::string na_symbol_ = "NA";
  std::string na_definition_ = std::string(kDefaultNaDefinition);
  std::unordered_map<std::string, RelationId> by_name_;
  std::vector<std::string> warnings_;
};

// Offsets count Unicode scalar values, not bytes.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct SentenceInstance {
  std::string sentence_id;
  std::string text;
  EntitySpan head;
  EntitySpan tail;

  friend bool operator==(const SentenceInstance&, const SentenceInstance&) = default;
};

struct Bag {
  std::string bag_id;
  std::string head_entity;
  std::string tail_entity;
  std::vector<SentenceInstance> sentences;
  LabelSet labels;

  friend bool operator==(const Bag&, const Bag&) = default;
};

struct QueryInstance {
  std::string query_id;
  std::string text;
  EntitySpan head;
  EntitySpan tail;
  LabelSet gold;

  friend bool operator==(const QueryInstance&, const QueryInstance&) = default;
};

// Resolves [start, end) against `text`, checks bounds and fills the surface.
EntitySpan make_span(std::string_view text, std::size_t start, std::size_t end);
// Throws ValidationError when a span is out of bounds, its surface does not
// match, or head and tail overlap.
void validate_spans(std::string_view text, const EntitySpan& head, const EntitySpan& tail);

RelationOntology load_ontology(const std::filesystem::path& path, std::string na_symbol = "NA");
void save_ontology(const std::filesystem::path& path, const RelationOntology& ontology);

std::vector<Bag> load_bags(const std::filesystem::path& path, const RelationOntology& ontology);
void save_bags(const std::filesystem::path& path, std::span<const Bag> bags,
               const RelationOntology& ontology);

std::vector<QueryInstance> load_queries(const std::filesystem::path& path,
                                        const RelationOntology& ontology);
void save_queries(const std::filesystem::path& path, std::span<const QueryInstance> queries,
                  const RelationOntology& ontology);

// For each relation, positions of the bags whose labels contain it, in corpus order.
using BagIndex = std::vector<std::vector<std::size_t>>;
BagIndex index_bags_by_relation(std::span<const Bag> bags, std::size_t n_relations);

double na_fraction(std::span<const Bag> bags);

// Immutable training corpus with lookup tables. Safe for concurrent reads.
class Corpus {
 public:
  Corpus(RelationOntology ontology, std::vector<Bag> bags);

  const RelationOntology& ontology() const { return ontology_; }
  const std::vector<Bag>& bags() const { return bags_; }
  const Bag& bag(std::size_t pos) const { return bags_.at(pos); }
  const BagIndex& index() const { return index_; }
  const std::vector<std::size_t>& bags_with(RelationId r) const { return index_.at(r); }

  std::optional<std::size_t> find_bag(std::string_view bag_id) const;
  const SentenceInstance* find_sentence(std::string_view sentence_id) const;
  std::size_t n_sentences() const { return sentence_pos_.size(); }

 private:
  RelationOntology ontology_;
  std::vector<Bag> bags_;
  BagIndex index_;
  std::unordered_map<std::string, std::size_t> bag_pos_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> sentence_pos_;
};

}  // namespace hydre
