#include "hydre/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "hydre/jsonl.hpp"
#include "hydre/selection.hpp"

namespace hydre {

using jsonl::json;

FactSet gold_facts(std::span<const QueryInstance> queries) {
  FactSet out;
  for (const auto& q : queries) out[q.query_id] = q.gold;
  return out;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

const LabelSet& labels_or_na(const FactSet& facts, const std::string& id) {
  static const LabelSet na;
  auto it = facts.find(id);
  return it == facts.end() ? na : it->second;
}

}  // namespace

EvalReport score(const FactSet& gold, const FactSet& pred, std::size_t n_relations) {
  for (const auto& [id, labels] : pred) {
    if (!gold.contains(id)) throw ValidationError("prediction for unknown query: " + id);
  }
  EvalReport rep;
  rep.per_relation.resize(n_relations);
  rep.n_queries = gold.size();
  for (const auto& [id, g] : gold) {
    const auto& p = labels_or_na(pred, id);
    for (RelationId r : g) {
      if (r >= n_relations) throw ValidationError("gold relation outside ontology for " + id);
      auto& m = rep.per_relation[r];
      ++m.support;
      if (p.contains(r)) ++m.tp; else ++m.fn;
    }
    for (RelationId r : p) {
      if (r >= n_relations) throw ValidationError("predicted relation outside ontology for " + id);
      if (!g.contains(r)) ++rep.per_relation[r].fp;
    }
    rep.n_gold_facts += g.size();
    rep.n_pred_facts += p.size();
  }

  std::size_t tp = 0, fp = 0, fn = 0, supported = 0;
  double f1_sum = 0.0;
  for (auto& m : rep.per_relation) {
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = f1_of(m.precision, m.recall);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    if (m.support > 0) {
      ++supported;
      f1_sum += m.f1;
    }
  }
  rep.micro_precision = ratio(tp, tp + fp);
  rep.micro_recall = ratio(tp, tp + fn);
  rep.micro_f1 = f1_of(rep.micro_precision, rep.micro_recall);
  rep.macro_f1 = supported == 0 ? 0.0 : f1_sum / static_cast<double>(supported);
  return rep;
}

std::vector<double> recall_curve(const FactSet& gold, const ScoreMatrix& scores) {
  const std::size_t n = scores.n_relations();
  // hits[j] = facts whose relation sits at rank j.
  std::vector<std::size_t> hits(n, 0);
  std::size_t total = 0;
  for (const auto& [id, g] : gold) {
    if (g.is_na()) continue;
    const auto order = rank_relations(scores.row(id));
    for (std::size_t j = 0; j < n; ++j) {
      if (g.contains(order[j])) ++hits[j];
    }
    total += g.size();
  }
  std::vector<double> curve(n);
  std::size_t cum = 0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += hits[j];
    curve[j] = total == 0 ? 1.0 : ratio(cum, total);
  }
  return curve;
}

double recall_at_k(const FactSet& gold, const ScoreMatrix& scores, std::size_t k) {
  if (k < 1 || k > scores.n_relations()) throw ValidationError("recall_at_k: k out of range");
  return recall_curve(gold, scores)[k - 1];
}

std::vector<PairedFact> pair_systems(const FactSet& gold, const FactSet& a, const FactSet& b) {
  std::vector<PairedFact> out;
  for (const auto& [id, g] : gold) {
    const auto& pa = labels_or_na(a, id);
    const auto& pb = labels_or_na(b, id);
    for (RelationId r : g) out.push_back({id, r, pa.contains(r), pb.contains(r)});
  }
  return out;
}

double binomial_half_cdf(std::size_t m, std::size_t n) {
  if (m >= n) return 1.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (std::size_t i = 0; i <= m; ++i) {
    const double log_choose = lgn - std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
    sum += std::exp(log_choose + log_half_n);
  }
  return std::min(sum, 1.0);
}

double chi2_1_sf(double x) { return x <= 0.0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

McNemarResult mcnemar(std::size_t b, std::size_t c) {
  McNemarResult res;
  res.b = b;
  res.c = c;
  const std::size_t n = b + c;
  if (n == 0) return res;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  res.statistic = diff * diff / static_cast<double>(n);
  if (n < kExactBinomialBelow) {
    res.exact = true;
    res.p_value = 2.0 * std::min(binomial_half_cdf(std::min(b, c), n), 0.5);
  } else {
    res.p_value = chi2_1_sf(res.statistic);
  }
  return res;
}

McNemarResult mcnemar(std::span<const PairedFact> records) {
  std::size_t b = 0, c = 0;
  for (const auto& r : records) {
    if (r.a_correct && !r.b_correct) ++b;
    if (!r.a_correct && r.b_correct) ++c;
  }
  return mcnemar(b, c);
}

std::vector<ConfusionCell> confusion_pairs(const FactSet& gold, const FactSet& pred,
                                           std::span<const std::pair<RelationId, RelationId>> pairs) {
  std::vector<ConfusionCell> out;
  for (const auto& [a, b] : pairs) {
    ConfusionCell cell{a, b};
    for (const auto& [id, g] : gold) {
      const auto& p = labels_or_na(pred, id);
      if (g.contains(a) && p.contains(a)) ++cell.a_as_a;
      if (g.contains(b) && p.contains(b)) ++cell.b_as_b;
      if (g.contains(a) && !g.contains(b) && p.contains(b) && !p.contains(a)) ++cell.a_as_b;
      if (g.contains(b) && !g.contains(a) && p.contains(a) && !p.contains(b)) ++cell.b_as_a;
    }
    out.push_back(cell);
  }
  return out;
}

std::string summary_cell(const EvalReport& report) {
  return std::to_string(std::lround(report.micro_f1 * 100.0)) + "/" +
         std::to_string(std::lround(report.macro_f1 * 100.0));
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ReportFiles write_report(const std::filesystem::path& dir, const EvalReport& report,
                         const RelationOntology& ontology,
                         const std::optional<std::vector<double>>& recall_by_k,
                         const std::optional<McNemarResult>& comparison,
                         std::span<const ConfusionCell> confusion) {
  std::filesystem::create_directories(dir);
  ReportFiles files{dir / "report.json", dir / "per_relation.csv", std::nullopt, dir / "summary.txt"};

  json per = json::array();
  for (RelationId r = 0; r < report.per_relation.size(); ++r) {
    const auto& m = report.per_relation[r];
    per.push_back({{"relation", ontology.name(r)},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support},
                   {"tp", m.tp},
                   {"fp", m.fp},
                   {"fn", m.fn}});
  }
  json j = {{"micro_precision", report.micro_precision},
            {"micro_recall", report.micro_recall},
            {"micro_f1", report.micro_f1},
            {"macro_f1", report.macro_f1},
            {"n_queries", report.n_queries},
            {"n_gold_facts", report.n_gold_facts},
            {"n_pred_facts", report.n_pred_facts},
            {"summary", summary_cell(report)},
            {"per_relation", per}};
  if (recall_by_k) j["recall_at_k"] = *recall_by_k;
  if (comparison) {
    j["mcnemar"] = {{"b", comparison->b},
                    {"c", comparison->c},
                    {"statistic", comparison->statistic},
                    {"p_value", comparison->p_value},
                    {"exact", comparison->exact}};
  }
  std::ofstream(files.report_json) << j.dump(2) << '\n';

  {
    std::ofstream csv(files.per_relation_csv);
    csv << "relation,precision,recall,f1,support,tp,fp,fn\n";
    for (RelationId r = 0; r < report.per_relation.size(); ++r) {
      const auto& m = report.per_relation[r];
      csv << csv_field(ontology.name(r)) << ',' << fixed(m.precision) << ',' << fixed(m.recall) << ','
          << fixed(m.f1) << ',' << m.support << ',' << m.tp << ',' << m.fp << ',' << m.fn << '\n';
    }
  }

  if (!confusion.empty()) {
    files.confusion_csv = dir / "confusion_pairs.csv";
    std::ofstream csv(*files.confusion_csv);
    csv << "relation_a,relation_b,a_as_a,a_as_b,b_as_a,b_as_b\n";
    for (const auto& c : confusion) {
      csv << csv_field(ontology.name(c.a)) << ',' << csv_field(ontology.name(c.b)) << ',' << c.a_as_a
          << ',' << c.a_as_b << ',' << c.b_as_a << ',' << c.b_as_b << '\n';
    }
  }

  {
    std::ofstream txt(files.summary_txt);
    txt << "micro/macro F1: " << summary_cell(report) << '\n';
    txt << "micro P/R/F1: " << fixed(report.micro_precision) << ' ' << fixed(report.micro_recall)
        << ' ' << fixed(report.micro_f1) << '\n';
    txt << "queries: " << report.n_queries << ", gold facts: " << report.n_gold_facts
        << ", predicted facts: " << report.n_pred_facts << '\n';
    if (comparison) {
      txt << "McNemar b=" << comparison->b << " c=" << comparison->c
          << " statistic=" << fixed(comparison->statistic) << " p=" << fixed(comparison->p_value)
          << (comparison->exact ? " (exact binomial)" : " (chi-square)") << '\n';
    }
  }
  return files;
}

}  // namespace hydre
