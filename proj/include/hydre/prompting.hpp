#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hydre/corpus.hpp"
#include "hydre/selection.hpp"

namespace hydre {

inline constexpr std::string_view kTaskInstruction =
    "Choose all applicable relations between head and tail entities from the set below. "
    "Print each relation in a new line. If none of the relations are applicable, output 'NA'.";

enum class RelationScope { full_ontology, candidates_only };

struct MarkerTags {
  std::string head_open = "<Head>";
  std::string head_close = "</Head>";
  std::string tail_open = "<Tail>";
  std::string tail_close = "</Tail>";
};

struct PromptTemplate {
  std::string task_instruction = std::string(kTaskInstruction);
  bool include_definitions = true;
  RelationScope relation_scope = RelationScope::full_ontology;
  MarkerTags tags;

  // Tags must be nonempty and pairwise distinct.
  void validate() const;
};

// The sentence with entity tags wrapped around the head and tail spans.
std::string tag_sentence(std::string_view text, const EntitySpan& head, const EntitySpan& tail,
                         const MarkerTags& tags);

// Prompt layout:
//   <instruction>
//   <name> : <definition>        one line per listed relation, ontology order
//   <NA> : <NA definition>
//   (blank line)
//   Input: <tagged exemplar>     per exemplar, followed by a blank line
//   Output: <label>
//   <label>...
//   (blank line)
//   Input: <tagged query>
//   Output:
// A set flagged candidates_only_scope lists only its candidate relations.
std::string render_prompt(const QueryInstance& query, const ExemplarSet& exemplars,
                          const RelationOntology& ontology, const PromptTemplate& tmpl = {});

// Exemplar "Output:" block for a label set, one relation per line.
std::string render_output_block(const LabelSet& labels, const RelationOntology& ontology);

std::size_t whitespace_tokens(std::string_view text);

struct ParsedPrediction {
  LabelSet relations;  // empty means NA
  std::string raw_response;
  std::vector<std::string> matched_lines;
};

// Total: every response maps to a relation set. A name counts when it occurs
// verbatim and is not glued to other name characters. NA alongside relations
// is dropped; no match at all means NA.
ParsedPrediction parse_response(std::string_view raw, const RelationOntology& ontology);

}  // namespace hydre
