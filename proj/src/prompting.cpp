#include "hydre/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "hydre/error.hpp"
#include "hydre/utf8.hpp"

namespace hydre {

void PromptTemplate::validate() const {
  const std::vector<const std::string*> all{&tags.head_open, &tags.head_close, &tags.tail_open,
                                            &tags.tail_close};
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i]->empty()) throw ValidationError("marker tags must be nonempty");
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (*all[i] == *all[j]) throw ValidationError("marker tags must be distinct");
    }
  }
}

std::string tag_sentence(std::string_view text, const EntitySpan& head, const EntitySpan& tail,
                         const MarkerTags& tags) {
  validate_spans(text, head, tail);
  const auto bounds = *utf8::boundaries(text);
  struct Mark {
    std::size_t start, end;
    const std::string* open;
    const std::string* close;
  };
  Mark a{bounds[head.start], bounds[head.end], &tags.head_open, &tags.head_close};
  Mark b{bounds[tail.start], bounds[tail.end], &tags.tail_open, &tags.tail_close};
  if (b.start < a.start) std::swap(a, b);

  std::string out;
  out.reserve(text.size() + 32);
  out.append(text.substr(0, a.start));
  out.append(*a.open).append(text.substr(a.start, a.end - a.start)).append(*a.close);
  out.append(text.substr(a.end, b.start - a.end));
  out.append(*b.open).append(text.substr(b.start, b.end - b.start)).append(*b.close);
  out.append(text.substr(b.end));
  return out;
}

std::string render_output_block(const LabelSet& labels, const RelationOntology& ontology) {
  std::string out = "Output:";
  const auto names = ontology.names(labels);
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += i == 0 ? " " : "\n";
    out += names[i];
  }
  return out;
}

std::string render_prompt(const QueryInstance& query, const ExemplarSet& exemplars,
                          const RelationOntology& ontology, const PromptTemplate& tmpl) {
  tmpl.validate();
  const bool candidates_only =
      exemplars.candidates_only_scope || tmpl.relation_scope == RelationScope::candidates_only;

  std::vector<RelationId> listed;
  if (candidates_only) {
    if (exemplars.candidates.empty()) {
      throw ValidationError("candidate-scoped prompt for " + query.query_id + " has no candidates");
    }
    for (const auto& c : exemplars.candidates) listed.push_back(c.relation);
    std::sort(listed.begin(), listed.end());
  } else {
    listed.resize(ontology.size());
    for (RelationId r = 0; r < ontology.size(); ++r) listed[r] = r;
  }

  std::string out = tmpl.task_instruction;
  out += '\n';
  for (RelationId r : listed) {
    out += ontology.name(r);
    if (tmpl.include_definitions) out += " : " + ontology[r].definition;
    out += '\n';
  }
  out += ontology.na_symbol();
  if (tmpl.include_definitions) out += " : " + ontology.na_definition();
  out += "\n\n";

  for (const auto& ex : exemplars.exemplars) {
    for (RelationId r : ex.labels) {
      if (r >= ontology.size()) {
        throw ValidationError("exemplar from bag " + ex.source_bag_id + " has a label outside the ontology");
      }
    }
    out += "Input:";
    for (const auto& s : ex.sentences) {
      out += ' ';
      out += tag_sentence(s.text, s.head, s.tail, tmpl.tags);
    }
    out += '\n';
    out += render_output_block(ex.labels, ontology);
    out += "\n\n";
  }

  out += "Input: ";
  out += tag_sentence(query.text, query.head, query.tail, tmpl.tags);
  out += "\nOutput:";
  return out;
}

std::size_t whitespace_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

namespace {

bool is_name_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || c == '/' || c == '-';
}

bool occurs_bounded(std::string_view hay, std::string_view needle) {
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !is_name_char(hay[pos - 1]);
    const auto after = pos + needle.size();
    const bool right_ok = after == hay.size() || !is_name_char(hay[after]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

}  // namespace

ParsedPrediction parse_response(std::string_view raw, const RelationOntology& ontology) {
  ParsedPrediction out;
  out.raw_response = std::string(raw);

  std::vector<RelationId> found;
  for (RelationId r = 0; r < ontology.size(); ++r) {
    if (occurs_bounded(raw, ontology.name(r))) found.push_back(r);
  }
  out.relations = LabelSet(std::move(found));

  std::istringstream lines{std::string(raw)};
  std::string line;
  while (std::getline(lines, line)) {
    bool hit = occurs_bounded(line, ontology.na_symbol());
    for (RelationId r = 0; !hit && r < ontology.size(); ++r) hit = occurs_bounded(line, ontology.name(r));
    if (hit) out.matched_lines.push_back(line);
  }
  return out;
}

}  // namespace hydre
