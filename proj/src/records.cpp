#include "hydre/records.hpp"

namespace hydre::records {

json exemplar_set_to_json(const ExemplarSet& set, const RelationOntology& ontology) {
  json cands = json::array();
  for (const auto& c : set.candidates) {
    cands.push_back({{"relation", ontology.name(c.relation)}, {"score", c.score}});
  }
  json skipped = json::array();
  for (RelationId r : set.skipped) skipped.push_back(ontology.name(r));
  json exemplars = json::array();
  for (const auto& ex : set.exemplars) {
    json e = {{"sentence_id", ex.sentences.front().sentence_id},
              {"source_bag_id", ex.source_bag_id},
              {"candidate_relation",
               ex.candidate_relation ? json(ontology.name(*ex.candidate_relation)) : json(nullptr)},
              {"candidate_score", ex.candidate_score},
              {"labels", ontology.names(ex.labels)}};
    if (ex.sentences.size() > 1) {
      json ids = json::array();
      for (const auto& s : ex.sentences) ids.push_back(s.sentence_id);
      e["sentence_ids"] = std::move(ids);
    }
    exemplars.push_back(std::move(e));
  }
  return {{"query_id", set.query_id},
          {"candidates", std::move(cands)},
          {"skipped", std::move(skipped)},
          {"candidates_only", set.candidates_only_scope},
          {"exemplars", std::move(exemplars)}};
}

ExemplarSet exemplar_set_from_json(const json& j, const Corpus& corpus) {
  const auto& ontology = corpus.ontology();
  ExemplarSet set;
  set.query_id = j.at("query_id").get<std::string>();
  for (const auto& c : j.at("candidates")) {
    set.candidates.push_back({ontology.id(c.at("relation").get<std::string>()),
                              c.at("score").get<double>()});
  }
  for (const auto& s : j.at("skipped")) set.skipped.push_back(ontology.id(s.get<std::string>()));
  set.candidates_only_scope = j.value("candidates_only", false);

  auto sentence = [&](const std::string& id) {
    const auto* s = corpus.find_sentence(id);
    if (s == nullptr) throw ValidationError("selection references unknown sentence " + id);
    return *s;
  };
  for (const auto& e : j.at("exemplars")) {
    Exemplar ex;
    if (e.contains("sentence_ids")) {
      for (const auto& id : e.at("sentence_ids")) ex.sentences.push_back(sentence(id.get<std::string>()));
    } else {
      ex.sentences.push_back(sentence(e.at("sentence_id").get<std::string>()));
    }
    ex.source_bag_id = e.at("source_bag_id").get<std::string>();
    if (!e.at("candidate_relation").is_null()) {
      ex.candidate_relation = ontology.id(e.at("candidate_relation").get<std::string>());
    }
    ex.candidate_score = e.at("candidate_score").get<double>();
    ex.labels = ontology.labels(e.at("labels").get<std::vector<std::string>>());
    set.exemplars.push_back(std::move(ex));
  }
  return set;
}

void write_selections(const std::filesystem::path& path, std::span<const ExemplarSet> sets,
                      const RelationOntology& ontology) {
  jsonl::Writer out(path);
  for (const auto& s : sets) out.write(exemplar_set_to_json(s, ontology));
}

std::vector<ExemplarSet> read_selections(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<ExemplarSet> out;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    out.push_back(exemplar_set_from_json(j, corpus));
  });
  return out;
}

json prediction_to_json(const BatchRecord& record, const RelationOntology& ontology) {
  json rels = json::array();
  for (RelationId r : record.prediction.relations) rels.push_back(ontology.name(r));
  json j = {{"query_id", record.query_id},
            {"relations", std::move(rels)},
            {"raw", record.prediction.raw_response}};
  if (record.error) j["error"] = *record.error;
  return j;
}

void write_predictions(const std::filesystem::path& path, std::span<const BatchRecord> records,
                       const RelationOntology& ontology) {
  jsonl::Writer out(path);
  for (const auto& r : records) out.write(prediction_to_json(r, ontology));
}

FactSet read_predictions(const std::filesystem::path& path, const RelationOntology& ontology) {
  FactSet out;
  jsonl::for_each(path, [&](const json& j, std::size_t) {
    const auto id = j.at("query_id").get<std::string>();
    if (out.contains(id)) throw ValidationError("duplicate prediction for " + id);
    out[id] = ontology.labels(j.at("relations").get<std::vector<std::string>>());
  });
  return out;
}

void write_prompts(const std::filesystem::path& path, std::span<const PromptRecord> prompts) {
  jsonl::Writer out(path);
  for (const auto& p : prompts) {
    out.write({{"query_id", p.query_id}, {"prompt", p.prompt}, {"response", p.response}});
  }
}

}  // namespace hydre::records
