// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "hydre/baselines.hpp"
#include "hydre/cli.hpp"
#include "hydre/config.hpp"
#include "hydre/evaluation.hpp"
#include "hydre/prompting.hpp"
#include "hydre/selection.hpp"
#include "support.hpp"

using namespace hydre;
using testing::fixtures;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name;
  if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
  std::cout << std::endl;
}

std::vector<double> row_of(const testing::Synthetic& syn, const std::string& id) { return syn.raw_scores.at(id); }

Outcome pipeline_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t corpora = 0;
  for (std::uint64_t seed = 5000; seed < 5200; ++seed) {
    const auto syn = testing::make_synthetic(seed);
    for (const auto& qid : syn.query_ids) {
      for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::size_t{5}, syn.n_rel}) {
        HydreOptions opt;
        opt.scoring.k = k;
        const auto got = build_exemplar_set(qid, *syn.corpus, syn.providers, opt);
        std::string why;
        o.require(testing::matches_oracle(got, testing::oracle_pipeline(syn, qid, k, 0.5), &why),
                  "seed " + std::to_string(seed) + " " + qid + ": " + why);
      }
    }
    ++corpora;
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(corpora) + " corpora, " + std::to_string(secs) + " s";
  return o;
}

Outcome stage_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const auto syn = testing::make_synthetic(seed);
    const auto& scores = *syn.providers.scores;
    const auto& emb = *syn.providers.embeddings;
    for (const auto& qid : syn.query_ids) {
      for (std::size_t k = 1; k <= syn.n_rel; ++k) {
        const auto got = select_candidates(qid, scores, k);
        const auto want = testing::oracle_topk(row_of(syn, qid), k);
        o.require(got.size() == want.size(), "select_candidates size");
        for (std::size_t i = 0; i < got.size() && i < want.size(); ++i) {
          o.require(got[i].relation == want[i], "select_candidates order");
          o.require(std::abs(got[i].score - row_of(syn, qid)[want[i]]) < 1e-12, "select_candidates score");
        }
      }
      for (RelationId r = 0; r < syn.n_rel; ++r) {
        const auto want = testing::oracle_bag(syn, qid, r);
        if (!want) {
          bool threw = false;
          try {
            select_bag(qid, r, *syn.corpus, syn.providers, {});
          } catch (const NoBagForRelation&) {
            threw = true;
          }
          o.require(threw, "select_bag without bags");
        } else {
          o.require(select_bag(qid, r, *syn.corpus, syn.providers, {}) == *want, "select_bag");
          const double s = combined_bag_score(qid, syn.corpus->bag(*want), r, syn.providers, {});
          o.require(std::abs(s - testing::oracle_bag_score(syn, qid, syn.corpus->bag(*want), r, 1.0, 1.0)) < 1e-12,
                    "bag score");
        }
      }
    }
    for (const auto& bag : syn.corpus->bags()) {
      o.require(select_sentence(bag, scores, 0.5) == testing::oracle_sentence(syn.raw_scores, bag, 0.5),
                "select_sentence");
      for (const auto& [r, s] : reduce_bag(bag, scores)) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < bag.sentences.size(); ++i) {
          if (syn.raw_scores.at(bag.sentences[i].sentence_id)[r] >
              syn.raw_scores.at(bag.sentences[best].sentence_id)[r]) {
            best = i;
          }
        }
        o.require(s == best && bag.labels.contains(r), "reduce_bag");
      }
    }

    const auto flat = flatten(syn.corpus->bags());
    const std::size_t k = std::min<std::size_t>(1 + seed % 5, flat.size());
    auto sim = [&](const std::string& a, const std::string& b) {
      return testing::oracle_cos01(syn.raw_vec.at(a), syn.raw_vec.at(b));
    };
    const std::string qid = syn.query_ids.front();
    std::vector<std::size_t> order(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sim(qid, flat[a].sentence->sentence_id) > sim(qid, flat[b].sentence->sentence_id);
    });
    std::vector<std::size_t> top(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    o.require(topk_sim(qid, flat, emb, k) == top, "topk_sim");

    const double alpha = 0.3;
    std::vector<std::size_t> picked;
    std::vector<bool> used(order.size(), false);
    while (picked.size() < k) {
      std::optional<std::size_t> best;
      double best_obj = 0.0;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (used[i]) continue;
        const auto& id = flat[order[i]].sentence->sentence_id;
        double obj = sim(qid, id);
        if (!picked.empty()) {
          double red = -1.0;
          for (std::size_t p : picked) red = std::max(red, sim(id, flat[p].sentence->sentence_id));
          obj = alpha * obj - (1.0 - alpha) * red;
        }
        if (!best || obj > best_obj) {
          best = i;
          best_obj = obj;
        }
      }
      used[*best] = true;
      picked.push_back(order[*best]);
    }
    o.require(mmr_select(qid, flat, emb, k, alpha, std::nullopt) == picked, "mmr_select");

    std::mt19937_64 rng(seed);
    const auto gold = testing::random_facts(rng, syn.query_ids, syn.n_rel, 0.3);
    const auto pred = testing::random_facts(rng, syn.query_ids, syn.n_rel, 0.3);
    for (std::size_t kk = 1; kk <= syn.n_rel; ++kk) {
      std::size_t hit = 0, total = 0;
      for (const auto& [q, g] : gold) {
        const auto tk = testing::oracle_topk(row_of(syn, q), kk);
        for (RelationId r : g) {
          ++total;
          hit += std::find(tk.begin(), tk.end(), r) != tk.end();
        }
      }
      const double want = total ? double(hit) / double(total) : 1.0;
      o.require(std::abs(recall_at_k(gold, scores, kk) - want) < 1e-12, "recall_at_k");
    }
    const std::vector<std::pair<RelationId, RelationId>> pairs{{0, 1}};
    const auto cell = confusion_pairs(gold, pred, pairs).front();
    std::size_t aa = 0, ab = 0, ba = 0, bb = 0;
    for (const auto& [q, g] : gold) {
      const auto& p = pred.at(q);
      aa += g.contains(0) && p.contains(0);
      bb += g.contains(1) && p.contains(1);
      ab += g.contains(0) && !g.contains(1) && p.contains(1) && !p.contains(0);
      ba += g.contains(1) && !g.contains(0) && p.contains(0) && !p.contains(1);
    }
    o.require(cell.a_as_a == aa && cell.a_as_b == ab && cell.b_as_a == ba && cell.b_as_b == bb,
              "confusion_pairs");
    ++instances;
  }
  const double secs = seconds_since(t0);
  o.require(instances >= 100, "too few instances");
  o.require(secs < 60.0, "took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = std::to_string(instances) + " instances, " + std::to_string(secs) + " s";
  return o;
}

Outcome mmr_degeneracy() {
  Outcome o;
  for (std::uint64_t seed = 300; seed < 400; ++seed) {
    const auto syn = testing::make_synthetic(seed);
    const auto flat = flatten(syn.corpus->bags());
    const std::size_t k = std::min<std::size_t>(1 + seed % 6, flat.size());
    const auto top = topk_sim(syn.query_ids.front(), flat, *syn.providers.embeddings, k);
    const auto mmr = mmr_select(syn.query_ids.front(), flat, *syn.providers.embeddings, k, 1.0);
    o.require(std::set<std::size_t>(top.begin(), top.end()) == std::set<std::size_t>(mmr.begin(), mmr.end()),
              "seed " + std::to_string(seed));
  }
  o.require(kDefaultMmrAlpha == 0.3, "kDefaultMmrAlpha");
  o.require(RunConfig{}.mmr_alpha == 0.3, "RunConfig default alpha");
  o.require(StrategyParams{}.mmr_alpha == 0.3, "StrategyParams default alpha");
  return o;
}

Outcome golden_prompts() {
  Outcome o;
  const auto ontology = load_ontology(fixtures() / "ontology.jsonl");
  const auto queries = load_queries(fixtures() / "queries.jsonl", ontology);
  const Corpus corpus(ontology, load_bags(fixtures() / "bags.jsonl", ontology));
  Providers providers;
  const std::vector<fs::path> s{fixtures() / "scores.jsonl"}, e{fixtures() / "embeddings.jsonl"};
  providers.scores = load_scores(s, ontology);
  providers.embeddings = load_embeddings(e);
  const auto flat = flatten(corpus.bags());
  const auto ids = jsonl::json::parse(testing::slurp(fixtures() / "golden_prompts.json"));
  const std::vector<std::tuple<std::string, std::string, std::string>> cases{
      {"hydre", "hydre", "golden_prompt_hydre.txt"},
      {"no_icl", "ablation:no_icl", "golden_prompt_no_icl.txt"},
      {"reduced_bag", "reduced_bag", "golden_prompt_reduced.txt"}};
  for (const auto& [key, strategy, file] : cases) {
    const auto qid = ids.at(key).get<std::string>();
    const auto q = std::find_if(queries.begin(), queries.end(), [&](const auto& x) { return x.query_id == qid; });
    o.require(q != queries.end(), "query " + qid);
    if (q == queries.end()) continue;
    const auto set = select_exemplars(Strategy::parse(strategy), qid, corpus, flat, providers, StrategyParams{});
    o.require(render_prompt(*q, set, ontology) == testing::slurp(fixtures() / file), file);
  }
  return o;
}

Outcome parser_suite() {
  Outcome o;
  const auto ontology = load_ontology(fixtures() / "ontology.jsonl");
  using V = std::vector<std::string>;
  const std::vector<std::pair<std::string, V>> cases{
      {"/people/person/religion", {"/people/person/religion"}},
      {"/people/person/religion\n", {"/people/person/religion"}},
      {"  /people/person/religion  ", {"/people/person/religion"}},
      {"/location/country/capital\n/location/location/contains",
       {"/location/country/capital", "/location/location/contains"}},
      {"/location/location/contains\n/location/country/capital",
       {"/location/country/capital", "/location/location/contains"}},
      {"/business/location\n/business/company/founders\n/people/person/children",
       {"/people/person/children", "/business/location", "/business/company/founders"}},
      {"NA", {}},
      {"NA\n", {}},
      {"", {}},
      {"I cannot determine the relation.", {}},
      {"The answer is none of these.", {}},
      {"NA\n/location/location/contains", {"/location/location/contains"}},
      {"/location/location/contains\nNA", {"/location/location/contains"}},
      {"/location/location/contains\n/location/location/contains", {"/location/location/contains"}},
      {"/location/country/capital_city", {}},
      {"/religion", {}},
      {"/business/location/extra", {}},
      {"Answer: /people/person/religion.", {"/people/person/religion"}},
      {"- /business/location\n- /business/company/founders",
       {"/business/location", "/business/company/founders"}},
      {"Output:\n/people/person/ethnicity\nsomething else", {"/people/person/ethnicity"}},
      {"/PEOPLE/PERSON/RELIGION", {}},
      {"/people/person/nationality, /people/person/place_lived",
       {"/people/person/nationality", "/people/person/place_lived"}},
  };
  std::size_t n = 0;
  for (const auto& [raw, want] : cases) {
    std::set<RelationId> want_ids;
    for (const auto& name : want) want_ids.insert(ontology.id(name));
    const auto got = parse_response(raw, ontology).relations;
    std::set<RelationId> got_ids(got.begin(), got.end());
    o.require(got_ids == want_ids, "case \"" + raw + "\"");
    ++n;
  }
  o.require(n >= 20, "too few cases");
  if (o.pass) o.detail = std::to_string(n) + " cases";
  return o;
}

Outcome metric_fixtures() {
  Outcome o;
  const FactSet gold{{"q1", LabelSet({0})}, {"q2", LabelSet({1, 2})}, {"q3", {}}, {"q4", {}}, {"q5", LabelSet({0, 2})}};
  const FactSet pred{{"q1", LabelSet({0, 1})}, {"q2", LabelSet({1})}, {"q3", {}}, {"q4", LabelSet({2})},
                     {"q5", LabelSet({0, 2})}};
  const auto rep = score(gold, pred, 3);
  o.require(std::abs(rep.micro_f1 - 8.0 / 11.0) < 1e-9, "micro F1");
  o.require(std::abs(rep.macro_f1 - 13.0 / 18.0) < 1e-9, "macro F1");
  const auto perfect = score(gold, gold, 3);
  o.require(perfect.micro_f1 == 1.0 && perfect.macro_f1 == 1.0, "pred=gold");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto syn = testing::make_synthetic(seed);
    std::mt19937_64 rng(seed);
    const auto g = testing::random_facts(rng, syn.query_ids, syn.n_rel, 0.3);
    double prev = 0.0;
    for (std::size_t k = 1; k <= syn.n_rel; ++k) {
      const double r = recall_at_k(g, *syn.providers.scores, k);
      o.require(r >= prev, "recall_at_k not monotone");
      prev = r;
    }
    o.require(prev == 1.0, "recall_at_k at |R|");
  }
  return o;
}

Outcome mcnemar_check() {
  Outcome o;
  const auto r = mcnemar(15, 5);
  o.require(r.statistic == 4.05, "statistic " + std::to_string(r.statistic));
  o.require(std::abs(r.p_value - 2.0 * testing::oracle_binomial_half_cdf(5, 20)) < 1e-9, "exact p");
  for (std::size_t b = 0; b < 25; ++b) {
    for (std::size_t c = 0; b + c < 25; ++c) {
      const double want = b + c == 0 ? 1.0 : std::min(1.0, 2.0 * testing::oracle_binomial_half_cdf(std::min(b, c), b + c));
      o.require(std::abs(mcnemar(b, c).p_value - want) < 1e-9, "p(" + std::to_string(b) + "," + std::to_string(c) + ")");
    }
  }
  if (o.pass) o.detail = "statistic 4.05, p " + std::to_string(r.p_value);
  return o;
}

Outcome reduced_bag_economy() {
  Outcome o;
  QueryInstance q;
  q.query_id = "Q";
  const auto s = testing::make_sentence("Q");
  q.text = s.text;
  q.head = s.head;
  q.tail = s.tail;
  std::size_t bags = 0, full_total = 0, reduced_total = 0;
  for (std::uint64_t seed = 700; bags < 100; ++seed) {
    const auto syn = testing::make_synthetic(seed);
    const auto onto = testing::numbered_ontology(syn.n_rel);
    const auto& bag = syn.corpus->bag(seed % syn.corpus->bags().size());
    Exemplar full{bag.sentences, bag.labels, bag.bag_id, std::nullopt, 0.0};
    Exemplar reduced{{}, bag.labels, bag.bag_id, std::nullopt, 0.0};
    std::set<std::size_t> seen;
    for (const auto& [r, i] : reduce_bag(bag, *syn.providers.scores)) {
      if (seen.insert(i).second) reduced.sentences.push_back(bag.sentences[i]);
    }
    ExemplarSet a{"Q", {full}, {}, {}, false}, b{"Q", {reduced}, {}, {}, false};
    const auto nf = whitespace_tokens(render_prompt(q, a, onto));
    const auto nr = whitespace_tokens(render_prompt(q, b, onto));
    o.require(nr <= nf, "bag " + bag.bag_id + " seed " + std::to_string(seed));
    full_total += nf;
    reduced_total += nr;
    ++bags;
  }
  if (o.pass) {
    o.detail = "mean tokens reduced " + std::to_string(reduced_total / bags) + " vs full " +
               std::to_string(full_total / bags);
  }
  return o;
}

Outcome replay_determinism() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto dir = testing::temp_dir("acceptance_replay");
  for (const auto& entry : fs::directory_iterator(fixtures())) {
    if (entry.is_regular_file()) fs::copy_file(entry.path(), dir / entry.path().filename());
  }
  std::size_t attempts = 0;
  for (const auto* name : {"run1", "run2"}) {
    std::ostringstream out, err;
    cli::Environment env;
    env.out = &out;
    env.err = &err;
    std::vector<FailOnDispatchBackend*> made;
    env.make_backend = [&](const RunConfig&) {
      auto b = std::make_unique<FailOnDispatchBackend>();
      made.push_back(b.get());
      return std::unique_ptr<Backend>(std::move(b));
    };
    const auto base = std::vector<std::string>{"--config", (dir / "config.json").string(), "--output",
                                               (dir / name).string()};
    auto with = [&](const std::string& cmd) {
      auto a = base;
      a.push_back(cmd);
      return a;
    };
    const int rc = cli::run(with("run"), env);
    o.require(rc == 0, std::string(name) + " run exit " + std::to_string(rc) + ": " + err.str());
    for (auto* b : made) attempts += b->attempts();
    o.require(cli::run(with("eval"), env) == 0, std::string(name) + " eval: " + err.str());
  }
  o.require(attempts == 0, std::to_string(attempts) + " dispatch attempts");
  for (const auto* f : {"predictions.jsonl", "prompts.jsonl", "eval/report.json", "eval/per_relation.csv",
                        "eval/summary.txt"}) {
    o.require(fs::exists(dir / "run1" / f), std::string("missing ") + f);
    o.require(testing::slurp(dir / "run1" / f) == testing::slurp(dir / "run2" / f), std::string(f) + " differs");
  }
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "took " + std::to_string(secs) + " s");
  if (o.pass) {
    const auto rep = jsonl::json::parse(testing::slurp(dir / "run1" / "eval" / "report.json"));
    o.detail = "micro/macro " + rep.at("summary").get<std::string>() + ", " + std::to_string(secs) + " s";
  }
  fs::remove_all(dir);
  return o;
}

Outcome defaults() {
  Outcome o;
  const RunConfig c;
  o.require(c.scoring.k == 5, "k");
  o.require(c.scoring.threshold == 0.5, "t");
  o.require(c.generation.temperature == 0.0, "temperature");
  o.require(c.generation.max_input_tokens == 2048, "max input");
  o.require(c.generation.max_output_tokens == 256, "max output");
  const auto j = config_to_json(config_from_json(jsonl::json::object()));
  o.require(j == config_to_json(c), "empty config differs from defaults");
  return o;
}

}  // namespace

int main() {
  report("selection-oracle-200-corpora", pipeline_oracle);
  report("stage-oracles", stage_oracles);
  report("mmr-degeneracy-and-default-alpha", mmr_degeneracy);
  report("golden-prompts", golden_prompts);
  report("parser-suite", parser_suite);
  report("metric-fixtures", metric_fixtures);
  report("mcnemar", mcnemar_check);
  report("reduced-bag-economy", reduced_bag_economy);
  report("replay-determinism", replay_determinism);
  report("defaults", defaults);
  return failures == 0 ? 0 : 1;
}
