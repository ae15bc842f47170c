#include "hydre/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "hydre/error.hpp"
#include "hydre/jsonl.hpp"
#include "hydre/utf8.hpp"

namespace hydre {

using jsonl::json;

LabelSet::LabelSet(std::vector<RelationId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool LabelSet::contains(RelationId r) const {
  return std::binary_search(ids_.begin(), ids_.end(), r);
}

LabelSet LabelSet::merged(const LabelSet& other) const {
  std::vector<RelationId> all = ids_;
  all.insert(all.end(), other.ids_.begin(), other.ids_.end());
  return LabelSet(std::move(all));
}

RelationOntology::RelationOntology(std::vector<Relation> relations, std::string na_symbol,
                                   std::string na_definition)
    : relations_(std::move(relations)),
      na_symbol_(std::move(na_symbol)),
      na_definition_(std::move(na_definition)) {
  if (na_symbol_.empty()) throw ValidationError("NA symbol must be nonempty");
  for (RelationId r = 0; r < relations_.size(); ++r) {
    const auto& rel = relations_[r];
    if (rel.name.empty()) throw ValidationError("relation name must be nonempty");
    if (rel.definition.empty()) {
      throw ValidationError("relation " + rel.name + " has an empty definition");
    }
    if (rel.name == na_symbol_) {
      throw ValidationError("relation name collides with NA symbol: " + rel.name);
    }
    if (!by_name_.emplace(rel.name, r).second) {
      throw ValidationError("duplicate relation name: " + rel.name);
    }
  }
  for (const auto& a : relations_) {
    for (const auto& b : relations_) {
      if (&a != &b && b.name.find(a.name) != std::string::npos) {
        warnings_.push_back("relation name " + a.name + " occurs inside " + b.name);
      }
    }
  }
}

std::optional<RelationId> RelationOntology::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

RelationId RelationOntology::id(std::string_view name) const {
  if (auto r = find(name)) return *r;
  throw ValidationError("unknown relation: " + std::string(name));
}

LabelSet RelationOntology::labels(std::span<const std::string> names, bool allow_na) const {
  std::vector<RelationId> ids;
  bool saw_na = false;
  for (const auto& n : names) {
    if (n == na_symbol_) {
      if (!allow_na) throw ValidationError("NA is not allowed here");
      saw_na = true;
      continue;
    }
    ids.push_back(id(n));
  }
  if (saw_na && !ids.empty()) {
    throw ValidationError("label set mixes " + na_symbol_ + " with relations");
  }
  return LabelSet(std::move(ids));
}

std::vector<std::string> RelationOntology::names(const LabelSet& labels) const {
  if (labels.is_na()) return {na_symbol_};
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (RelationId r : labels) out.push_back(name(r));
  return out;
}

EntitySpan make_span(std::string_view text, std::size_t start, std::size_t end) {
  auto bounds = utf8::boundaries(text);
  if (!bounds) throw ValidationError("text is not valid UTF-8");
  const std::size_t len = bounds->size() - 1;
  if (!(start < end && end <= len)) {
    throw ValidationError("malformed span [" + std::to_string(start) + "," + std::to_string(end) +
                          ") for text of length " + std::to_string(len));
  }
  const auto b0 = (*bounds)[start];
  const auto b1 = (*bounds)[end];
  return {start, end, std::string(text.substr(b0, b1 - b0))};
}

void validate_spans(std::string_view text, const EntitySpan& head, const EntitySpan& tail) {
  for (const auto* span : {&head, &tail}) {
    auto resolved = make_span(text, span->start, span->end);
    if (resolved.surface != span->surface) {
      throw ValidationError("span surface '" + span->surface + "' does not match text '" +
                            resolved.surface + "'");
    }
  }
  if (head.start < tail.end && tail.start < head.end) {
    throw ValidationError("head and tail spans overlap");
  }
}

namespace {

EntitySpan span_from_json(std::string_view text, const json& j, const char* field) {
  const auto& arr = j.at(field);
  if (!arr.is_array() || arr.size() != 2 || !arr[0].is_number_integer() ||
      !arr[1].is_number_integer()) {
    throw ValidationError(std::string("malformed span: ") + field);
  }
  const auto s = arr[0].get<long long>();
  const auto e = arr[1].get<long long>();
  if (s < 0 || e < 0) throw ValidationError(std::string("malformed span: ") + field);
  try {
    return make_span(text, static_cast<std::size_t>(s), static_cast<std::size_t>(e));
  } catch (const ValidationError& err) {
    throw ValidationError(std::string(field) + ": " + err.what());
  }
}

json span_to_json(const EntitySpan& s) { return json::array({s.start, s.end}); }

SentenceInstance sentence_from_json(const json& j) {
  SentenceInstance s;
  s.sentence_id = j.at("sentence_id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  if (s.sentence_id.empty()) throw ValidationError("empty sentence_id");
  s.head = span_from_json(s.text, j, "head_span");
  s.tail = span_from_json(s.text, j, "tail_span");
  validate_spans(s.text, s.head, s.tail);
  return s;
}

}  // namespace

RelationOntology load_ontology(const std::filesystem::path& path, std::string na_symbol) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError("ontology file not found: " + path.string());
  }
  std::vector<Relation> relations;
  std::unordered_set<std::string> seen;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    Relation rel{j.at("name").get<std::string>(), j.at("definition").get<std::string>()};
    if (rel.definition.empty()) {
      throw ValidationError("relation " + rel.name + " has an empty definition");
    }
    if (!seen.insert(rel.name).second) {
      throw ValidationError("duplicate relation name: " + rel.name);
    }
    relations.push_back(std::move(rel));
  });
  return RelationOntology(std::move(relations), std::move(na_symbol));
}

void save_ontology(const std::filesystem::path& path, const RelationOntology& ontology) {
  jsonl::Writer out(path);
  for (const auto& rel : ontology.relations()) {
    out.write({{"name", rel.name}, {"definition", rel.definition}});
  }
}

std::vector<Bag> load_bags(const std::filesystem::path& path, const RelationOntology& ontology) {
  std::vector<Bag> bags;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    Bag bag;
    bag.bag_id = j.at("bag_id").get<std::string>();
    bag.head_entity = j.at("head").get<std::string>();
    bag.tail_entity = j.at("tail").get<std::string>();
    const auto names = j.at("relations").get<std::vector<std::string>>();
    if (names.empty()) throw ValidationError("bag " + bag.bag_id + " has an empty labelset");
    bag.labels = ontology.labels(names);
    for (const auto& s : j.at("sentences")) bag.sentences.push_back(sentence_from_json(s));
    if (bag.sentences.empty()) throw ValidationError("bag " + bag.bag_id + " has no sentences");
    bags.push_back(std::move(bag));
  });
  return bags;
}

void save_bags(const std::filesystem::path& path, std::span<const Bag> bags,
               const RelationOntology& ontology) {
  jsonl::Writer out(path);
  for (const auto& bag : bags) {
    json sentences = json::array();
    for (const auto& s : bag.sentences) {
      sentences.push_back({{"sentence_id", s.sentence_id},
                           {"text", s.text},
                           {"head_span", span_to_json(s.head)},
                           {"tail_span", span_to_json(s.tail)}});
    }
    out.write({{"bag_id", bag.bag_id},
               {"head", bag.head_entity},
               {"tail", bag.tail_entity},
               {"relations", ontology.names(bag.labels)},
               {"sentences", std::move(sentences)}});
  }
}

std::vector<QueryInstance> load_queries(const std::filesystem::path& path,
                                        const RelationOntology& ontology) {
  std::vector<QueryInstance> queries;
  std::unordered_set<std::string> seen;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    QueryInstance q;
    q.query_id = j.at("query_id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    if (!seen.insert(q.query_id).second) {
      throw ValidationError("duplicate query_id: " + q.query_id);
    }
    q.head = span_from_json(q.text, j, "head_span");
    q.tail = span_from_json(q.text, j, "tail_span");
    validate_spans(q.text, q.head, q.tail);
    const auto gold = j.at("gold").get<std::vector<std::string>>();
    const bool is_na = j.value("is_na", false);
    q.gold = ontology.labels(gold);
    if (is_na && !q.gold.is_na()) {
      throw ValidationError("query " + q.query_id + " is marked is_na but has gold relations");
    }
    if (gold.empty() && !is_na) {
      throw ValidationError("query " + q.query_id + " has empty gold without is_na");
    }
    queries.push_back(std::move(q));
  });
  return queries;
}

void save_queries(const std::filesystem::path& path, std::span<const QueryInstance> queries,
                  const RelationOntology& ontology) {
  jsonl::Writer out(path);
  for (const auto& q : queries) {
    json record = {{"query_id", q.query_id},
                   {"text", q.text},
                   {"head_span", span_to_json(q.head)},
                   {"tail_span", span_to_json(q.tail)}};
    if (q.gold.is_na()) {
      record["gold"] = json::array();
      record["is_na"] = true;
    } else {
      record["gold"] = ontology.names(q.gold);
    }
    out.write(record);
  }
}

BagIndex index_bags_by_relation(std::span<const Bag> bags, std::size_t n_relations) {
  BagIndex index(n_relations);
  for (std::size_t pos = 0; pos < bags.size(); ++pos) {
    for (RelationId r : bags[pos].labels) index.at(r).push_back(pos);
  }
  return index;
}

double na_fraction(std::span<const Bag> bags) {
  if (bags.empty()) return 0.0;
  const auto n = std::count_if(bags.begin(), bags.end(),
                               [](const Bag& b) { return b.labels.is_na(); });
  return static_cast<double>(n) / static_cast<double>(bags.size());
}

Corpus::Corpus(RelationOntology ontology, std::vector<Bag> bags)
    : ontology_(std::move(ontology)), bags_(std::move(bags)) {
  for (std::size_t b = 0; b < bags_.size(); ++b) {
    const auto& bag = bags_[b];
    if (!bag_pos_.emplace(bag.bag_id, b).second) {
      throw ValidationError("duplicate bag_id: " + bag.bag_id);
    }
    if (bag.sentences.empty()) throw ValidationError("bag " + bag.bag_id + " has no sentences");
    for (RelationId r : bag.labels) {
      if (r >= ontology_.size()) throw ValidationError("bag " + bag.bag_id + " has unknown label");
    }
    for (std::size_t s = 0; s < bag.sentences.size(); ++s) {
      if (!sentence_pos_.emplace(bag.sentences[s].sentence_id, std::pair{b, s}).second) {
        throw ValidationError("duplicate sentence_id: " + bag.sentences[s].sentence_id);
      }
    }
  }
  index_ = index_bags_by_relation(bags_, ontology_.size());
}

std::optional<std::size_t> Corpus::find_bag(std::string_view bag_id) const {
  auto it = bag_pos_.find(std::string(bag_id));
  if (it == bag_pos_.end()) return std::nullopt;
  return it->second;
}

const SentenceInstance* Corpus::find_sentence(std::string_view sentence_id) const {
  auto it = sentence_pos_.find(std::string(sentence_id));
  if (it == sentence_pos_.end()) return nullptr;
  return &bags_[it->second.first].sentences[it->second.second];
}

}  // namespace hydre
