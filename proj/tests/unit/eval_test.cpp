#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "gnnx/error.hpp"
#include "gnnx/eval/metrics.hpp"
#include "gnnx/eval/oracle.hpp"
#include "gnnx/eval/report.hpp"
#include "gnnx/eval/timing.hpp"
#include "gnnx/explain/baselines.hpp"
#include "gnnx/graph/split.hpp"
#include "support/gradcheck.hpp"
#include "support/trained.hpp"

namespace gnnx {
namespace {

using testing::ba2_setup;

EvalRecord record(bool initial, bool expl, std::size_t edges = 6) {
  EvalRecord r;
  r.initial_correct = initial;
  r.explanation_correct = expl;
  r.num_hard_edges = edges;
  return r;
}

std::vector<const Graph*> pointers(const Dataset& ds, const std::vector<std::size_t>& indices) {
  std::vector<const Graph*> out;
  for (std::size_t i : indices) out.push_back(&ds.graphs[i]);
  return out;
}

// ---- fidelity ----

TEST(Fidelity, WorkedExampleFromIndicators) {
  const std::vector<EvalRecord> rs{record(true, true), record(true, true), record(true, true), record(true, false)};
  EXPECT_EQ(fidelity_acc(rs), 0.25);
  EXPECT_EQ(faithfulness_from_fidelity(fidelity_acc(rs)), 0.75);
  EXPECT_THROW(fidelity_acc(std::vector<EvalRecord>{}), DomainError);
}

TEST(Fidelity, WorkedExampleOnAModel) {
  // Four correctly classified graphs; three explanations are the full graph,
  // the fourth is a mask known to change the prediction.
  const auto& s = ba2_setup();
  const auto test = s.dataset.indices(Split::kTest);
  std::vector<const Graph*> graphs;
  std::vector<std::vector<double>> masks;
  const Graph* flipping = nullptr;
  std::vector<double> flipping_mask;
  for (std::size_t i : test) {
    const Graph& g = s.dataset.graphs[i];
    ASSERT_EQ(s.model->predict(g).label, *g.label);
    if (graphs.size() < 3) {
      graphs.push_back(&g);
      masks.emplace_back(g.num_edges(), 1.0);
      continue;
    }
    if (flipping) break;
    Rng rng(i);
    for (int attempt = 0; attempt < 200 && !flipping; ++attempt) {
      std::vector<double> m(g.num_edges(), 0.0);
      for (double& w : m) w = rng.uniform() < 0.3 ? 1.0 : 0.0;
      if (s.model->predict(g, &m).label != *g.label) {
        flipping = &g;
        flipping_mask = m;
      }
    }
  }
  ASSERT_NE(flipping, nullptr);
  graphs.push_back(flipping);
  masks.push_back(flipping_mask);
  EXPECT_EQ(fidelity_acc(*s.model, graphs, masks), 0.25);
}

TEST(Fidelity, FullGraphsGiveZero) {
  const auto& s = ba2_setup();
  const auto graphs = pointers(s.dataset, s.dataset.indices(Split::kTest));
  std::vector<std::vector<double>> masks;
  for (const Graph* g : graphs) masks.emplace_back(g->num_edges(), 1.0);
  EXPECT_EQ(fidelity_acc(*s.model, graphs, masks), 0.0);
  masks.pop_back();
  EXPECT_THROW(fidelity_acc(*s.model, graphs, masks), DimensionError);
}

TEST(Fidelity, SoftMasksAndUnlabelledGraphsAreRejected) {
  const auto& s = ba2_setup();
  const Graph& g = s.dataset.graphs[0];
  std::vector<double> soft(g.num_edges(), 0.5);
  EXPECT_THROW(fidelity_acc(*s.model, {&g}, {soft}), DomainError);
  Graph unlabelled = g;
  unlabelled.label.reset();
  EXPECT_THROW(fidelity_acc(*s.model, {&unlabelled}, {std::vector<double>(g.num_edges(), 1.0)}), DomainError);
}

TEST(Fidelity, BoundedAndPermutationInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalRecord> rs;
    const std::size_t n = 1 + rng.below(40);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool a = rng.below(2) == 1, b = rng.below(2) == 1;
      changed += a != b;
      rs.push_back(record(a, b));
    }
    const double f = fidelity_acc(rs);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_EQ(f, static_cast<double>(changed) / static_cast<double>(n));
    rng.shuffle(rs);
    EXPECT_EQ(fidelity_acc(rs), f);
  }
}

// ---- sparsity filter ----

TEST(SparsityFilter, StrictBoundAndCountingOracle) {
  std::vector<EvalRecord> six(10, record(true, true, 6));
  EXPECT_EQ(sparsity_filter(six).kept.size(), 10u);
  EXPECT_EQ(sparsity_filter(six).kept_fraction, 1.0);
  EXPECT_TRUE(sparsity_filter({record(true, true, 20)}).kept.empty());
  EXPECT_EQ(sparsity_filter({record(true, true, 19)}).kept.size(), 1u);

  Rng rng(8);
  std::vector<EvalRecord> mixed;
  std::size_t small = 0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t e = rng.below(40);
    small += e < 20 ? 1 : 0;
    mixed.push_back(record(true, true, e));
  }
  const auto r = sparsity_filter(mixed);
  EXPECT_EQ(r.kept.size(), small);
  EXPECT_DOUBLE_EQ(r.kept_fraction, static_cast<double>(small) / 500.0);
  for (const EvalRecord& k : r.kept) EXPECT_LT(k.num_hard_edges, 20u);
}

// ---- ground truth agreement ----

TEST(GroundTruth, JaccardEdgeCases) {
  const std::vector<Edge> a{{0, 1}, {1, 2}, {2, 3}};
  EXPECT_EQ(jaccard(a, a), 1.0);
  EXPECT_EQ(jaccard(a, {{4, 5}}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(a, {{1, 2}, {4, 5}}), 0.25);
  EXPECT_EQ(jaccard({}, {}), 1.0);
}

TEST(GroundTruth, AucMatchesPairwiseCount) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(6)) / 5.0;  // plenty of ties
      labels[i] = rng.below(3) == 0;
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!labels[i] || labels[j]) continue;
        pairs += 1.0;
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
      }
    }
    const auto auc = roc_auc(scores, labels);
    if (pairs == 0.0) {
      EXPECT_FALSE(auc.has_value());
    } else {
      ASSERT_TRUE(auc.has_value());
      EXPECT_NEAR(*auc, wins / pairs, 1e-12);
    }
  }
}

TEST(GroundTruth, PerfectAndRandomWeights) {
  const Dataset ds = gen_ba2motifs(1000, 2);
  std::vector<ExplanationRecord> perfect, random;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Graph& g = ds.graphs[i];
    const auto& gt = ds.annotations[i]->ground_truth_edges;
    ExplanationRecord p;
    p.graph_index = i;
    for (const Edge& e : g.edges) p.edge_weights.push_back(std::binary_search(gt.begin(), gt.end(), e) ? 1.0 : 0.0);
    p.hard_edges = gt;
    perfect.push_back(p);
    ExplanationRecord r;
    r.graph_index = i;
    const ExplanationMask m = explain_random(g, 6, 3);
    r.edge_weights = m.edge_weights;
    for (std::size_t k : m.hard_indices()) r.hard_edges.push_back(g.edges[k]);
    random.push_back(r);
  }
  const auto a = ground_truth_agreement(ds, perfect);
  EXPECT_EQ(*a.auc, 1.0);
  for (const auto& j : a.jaccard) EXPECT_EQ(*j, 1.0);
  const auto b = ground_truth_agreement(ds, random);
  EXPECT_NEAR(*b.auc, 0.5, 0.05);
  EXPECT_EQ(b.skipped, 0u);
}

TEST(GroundTruth, MissingAnnotationsAreSkippedAndCounted) {
  Dataset ds = gen_ba2motifs(10, 1);
  ds.annotations[2].reset();
  ds.annotations[5].reset();
  std::vector<ExplanationRecord> ex;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ExplanationRecord r;
    r.graph_index = i;
    r.edge_weights = random_weights(ds.graphs[i], 0);
    ex.push_back(r);
  }
  const auto a = ground_truth_agreement(ds, ex);
  EXPECT_EQ(a.skipped, 2u);
  EXPECT_FALSE(a.jaccard[2].has_value());
  EXPECT_TRUE(a.jaccard[3].has_value());
}

// ---- evaluation records ----

TEST(EvaluateExplanations, WorkerPoolMatchesSequential) {
  const auto& s = ba2_setup();
  const RandomExplainer random(default_explainer_config(ExplainerFamily::kRandom), s.model);
  const auto ex = explain_all(random, s.dataset, s.dataset.indices(Split::kTest), 6);
  const auto one = evaluate_explanations(*s.model, s.dataset, ex, 7, 1);
  const auto four = evaluate_explanations(*s.model, s.dataset, ex, 7, 4);
  ASSERT_EQ(one.size(), ex.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].graph_index, four[i].graph_index);
    EXPECT_EQ(one[i].explanation_correct, four[i].explanation_correct);
    EXPECT_EQ(one[i].gt_jaccard, four[i].gt_jaccard);
    EXPECT_EQ(one[i].num_hard_edges, 6u);
    EXPECT_EQ(one[i].seed, 7u);
    EXPECT_GE(one[i].wall_time_ms, 0.0);
  }
  EXPECT_THROW(evaluate_explanations(*s.model, s.dataset, ex, 7, 0), ValidationError);
  auto bad = ex;
  bad[3].hard_edges.push_back({0, 999});
  EXPECT_THROW(evaluate_explanations(*s.model, s.dataset, bad, 7, 3), ValidationError);
}

// ---- generalization ----

TEST(Generalization, IdenticalSetsGiveZeroAndEmptyUnseenFails) {
  const auto& s = ba2_setup();
  const RandomExplainer random(default_explainer_config(ExplainerFamily::kRandom), s.model);
  const auto test = pointers(s.dataset, s.dataset.indices(Split::kTest));
  EXPECT_EQ(generalization_gap(random, *s.model, test, test, 6), 0.0);
  EXPECT_THROW(generalization_gap(random, *s.model, test, {}, 6), DomainError);
}

TEST(Generalization, RandomBaselineGapIsSmall) {
  const auto& s = ba2_setup();
  std::vector<double> gaps;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset ds = split_seen_unseen(gen_ba2motifs(400, 100 + seed), 0.1, {}, seed);
    ExplainerConfig c = default_explainer_config(ExplainerFamily::kRandom);
    c.seed = seed;
    const RandomExplainer random(c, s.model);
    gaps.push_back(generalization_gap(random, *s.model, pointers(ds, ds.indices(Split::kTest)),
                                      pointers(ds, ds.indices(Split::kUnseen)), 6));
  }
  EXPECT_LE(std::abs(mean_stderr(gaps).mean), 0.1);
}

TEST(MeanStderrTest, KnownValues) {
  const MeanStderr m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(mean_stderr({3.0}).stderr_, 0.0);
}

// ---- timing ----

void spin_for(std::chrono::microseconds d) {
  const auto until = std::chrono::steady_clock::now() + d;
  while (std::chrono::steady_clock::now() < until) {
  }
}

TEST(Timing, ConstantStubHasSmallSpread) {
  const Graph g = make_graph(3, {{0, 1}, {1, 2}});
  std::vector<const Graph*> graphs(100, &g);
  std::vector<std::function<void(const Graph&)>> runs(5, [](const Graph&) { spin_for(std::chrono::microseconds(300)); });
  const TimingResult t = time_calls(runs, graphs);
  EXPECT_EQ(t.samples, 500u);
  EXPECT_EQ(t.run_means_ms.size(), 5u);
  EXPECT_GE(t.mean_ms, 0.3);
  EXPECT_LT(t.stderr_ms, 0.1 * t.mean_ms);
}

TEST(Timing, WarmUpIsExcluded) {
  const Graph g = make_graph(3, {{0, 1}, {1, 2}});
  std::vector<const Graph*> graphs(20, &g);
  int calls = 0;
  std::vector<std::function<void(const Graph&)>> runs{[&](const Graph&) {
    if (calls++ == 0) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }};
  const TimingResult t = time_calls(runs, graphs);
  EXPECT_EQ(calls, 21);
  EXPECT_LT(t.mean_ms, 5.0);
  EXPECT_THROW(time_calls({}, graphs), DomainError);
}

TEST(Timing, GrowsWithGraphSize) {
  const auto& s = ba2_setup();
  ExplainerConfig c = default_explainer_config(ExplainerFamily::kMaskGen);
  c.epochs = 1;
  const TrainedExplainer t = train_explainer(s.model, s.dataset, c);
  std::vector<double> means;
  for (std::size_t n : {25u, 40u, 67u}) {
    std::vector<Graph> corpus;
    for (std::size_t i = 0; i < 100; ++i) corpus.push_back(gen_ba(n, 1, 1000 * n + i));
    std::vector<const Graph*> graphs;
    for (const Graph& g : corpus) graphs.push_back(&g);
    means.push_back(time_inference({t.explainer.get()}, graphs, 6).mean_ms);
  }
  EXPECT_LT(means[0], means[1]);
  EXPECT_LT(means[1], means[2]);
}

// ---- brute-force oracle ----

TEST(Oracle, RefusesLargeGraphs) {
  const auto& s = ba2_setup();
  const Graph big = gen_ba(14, 1, 3);  // 13 edges
  EXPECT_THROW(brute_force_best_subgraph(*s.model, big, 6, 0), DomainError);
  const Graph ok = gen_ba(13, 1, 3);
  EXPECT_NO_THROW(brute_force_best_subgraph(*s.model, ok, 2, 0));
}

TEST(Oracle, EnumeratesExactlyTheConnectedSubsets) {
  const auto& s = ba2_setup();
  // Triangle with a pendant: 4 edges, connected subsets by size 4 + 5 + 4 + 1.
  const Graph g = make_graph(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}});
  EXPECT_EQ(brute_force_best_subgraph(*s.model, g, 4, 0).candidates, 14u);
  EXPECT_EQ(brute_force_best_subgraph(*s.model, g, 2, 0).candidates, 9u);
}

TEST(Oracle, TiesGoToTheLexicographicallySmallestSet) {
  GnnConfig config;
  ParameterSet zero;
  for (const auto& [name, t] : init_gnn_params(config, 0)) {
    zero.set(name, name.find("running_var") != std::string::npos ? Tensor::ones(t.shape()) : Tensor::zeros(t.shape()));
  }
  const GnnModel flat(config, zero);
  const Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  const OracleResult r = brute_force_best_subgraph(flat, g, 3, 1);
  EXPECT_EQ(r.probability, 0.5);
  EXPECT_EQ(r.edges, (std::vector<std::size_t>{0}));
}

TEST(Oracle, FullBudgetDominatesTheInputAndEverySubset) {
  const auto& s = ba2_setup();
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = testing::small_motif_graph(4, trial % 2 ? house_motif() : cycle_motif(), trial % 2, rng);
    ASSERT_LE(g.num_edges(), kOracleMaxEdges);
    const std::size_t target = s.model->predict(g).label;
    const OracleResult full = brute_force_best_subgraph(*s.model, g, g.num_edges(), target);
    EXPECT_GE(full.probability, s.model->predict(g).probs[target]);
    const OracleResult six = brute_force_best_subgraph(*s.model, g, 6, target);
    EXPECT_LE(six.edges.size(), 6u);
    EXPECT_EQ(achieved_probability(*s.model, g, six.edges, target), six.probability);
    for (int sub = 0; sub < 30; ++sub) {
      // A random connected subset grown from a random edge.
      std::vector<std::size_t> chosen{rng.below(g.num_edges())};
      const std::size_t size = 1 + rng.below(6);
      while (chosen.size() < size) {
        std::vector<std::size_t> frontier;
        for (std::size_t k = 0; k < g.num_edges(); ++k) {
          if (std::find(chosen.begin(), chosen.end(), k) != chosen.end()) continue;
          for (std::size_t c : chosen) {
            const Edge &a = g.edges[k], &b = g.edges[c];
            if (a.u == b.u || a.u == b.v || a.v == b.u || a.v == b.v) {
              frontier.push_back(k);
              break;
            }
          }
        }
        if (frontier.empty()) break;
        chosen.push_back(frontier[rng.below(frontier.size())]);
      }
      EXPECT_LE(achieved_probability(*s.model, g, chosen, target), six.probability);
    }
  }
}

TEST(Oracle, FindsTheCycleUnderACycleDetector) {
  const auto& s = testing::cycle_setup();
  ASSERT_GE(accuracy(*s.model, s.dataset, Split::kTest), 0.95);
  // 5-cycle 0..4 with a pendant at node 0.
  const Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 5}});
  ASSERT_EQ(s.model->predict(g).label, 1u);
  const OracleResult r = brute_force_best_subgraph(*s.model, g, 5, 1);
  std::vector<Edge> found;
  for (std::size_t e : r.edges) found.push_back(g.edges[e]);
  EXPECT_EQ(found, (std::vector<Edge>{{0, 1}, {0, 4}, {1, 2}, {2, 3}, {3, 4}}));
}

// ---- reports ----

EvalReport sample_report() {
  Rng rng(21);
  std::vector<EvalRecord> rs;
  for (std::uint64_t seed : {3u, 1u}) {
    for (std::size_t i = 0; i < 30; ++i) {
      EvalRecord r = record(rng.below(10) != 0, rng.below(4) != 0, rng.below(2) ? 6 : 25);
      r.graph_index = i;
      r.seed = seed;
      r.wall_time_ms = rng.uniform(0.1, 2.0);
      if (i % 3) r.gt_jaccard = rng.uniform();
      rs.push_back(r);
    }
  }
  EvalReport rep = make_report("maskgen", "ba2motifs", 6, rs);
  rep.gt_auc = 0.93;
  rep.generalization_discrepancy = 0.01;
  return rep;
}

TEST(Report, AggregatesFollowTheRecords) {
  const EvalReport r = sample_report();
  EXPECT_EQ(r.faithfulness, 1.0 - r.fidelity_acc);
  EXPECT_EQ(r.fidelity_acc, fidelity_acc(sparsity_filter(r.records).kept));
  EXPECT_EQ(r.seeds, (std::vector<std::uint64_t>{3, 1}));
  EXPECT_LT(r.kept_fraction, 1.0);
  EXPECT_NO_THROW(verify_report(r));
  EvalReport tampered = r;
  tampered.records[0].explanation_correct = !tampered.records[0].explanation_correct;
  tampered.records[0].num_hard_edges = 6;
  EXPECT_THROW(verify_report(tampered), IntegrityError);
}

TEST(Report, RoundTripsThroughCsvAndJson) {
  const EvalReport r = sample_report();
  const std::string csv = report_to_csv(r), json = report_to_json(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "graph_index,family,dataset,seed,initial_correct,explanation_correct,num_hard_edges,gt_jaccard,wall_time_ms");
  const EvalReport back = report_from_files(json, csv);
  EXPECT_EQ(report_to_csv(back), csv);
  EXPECT_EQ(report_to_json(back), json);
  EXPECT_EQ(back.records.size(), r.records.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(back.records[i].wall_time_ms, r.records[i].wall_time_ms);
    EXPECT_EQ(back.records[i].gt_jaccard, r.records[i].gt_jaccard);
  }
  EXPECT_EQ(back.gt_auc, 0.93);
  EXPECT_EQ(back.faithfulness + back.fidelity_acc, 1.0);
}

TEST(Report, TamperingIsDetected) {
  const EvalReport r = sample_report();
  const std::string csv = report_to_csv(r), json = report_to_json(r);
  std::string edited = csv;
  edited[edited.find(",maskgen,ba2motifs,3,") - 1] = '9';
  EXPECT_THROW(report_from_files(json, edited), IntegrityError);
  std::string bad_json = json;
  const auto pos = bad_json.find("\"faithfulness\": ");
  bad_json.replace(pos, std::string("\"faithfulness\": ").size(), "\"faithfulness\": 0.0, \"x\": ");
  EXPECT_THROW(report_from_files(bad_json, csv), Error);
  EXPECT_THROW(report_from_files("{", csv), ParseError);
  EXPECT_THROW(make_report("mask,gen", "d", 6, {record(true, true)}), ValidationError);
}

}  // namespace
}  // namespace gnnx
