#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gnnx/error.hpp"
#include "gnnx/explain/baselines.hpp"
#include "gnnx/explain/gumbel.hpp"
#include "gnnx/explain/maskgen.hpp"
#include "gnnx/explain/vgae.hpp"
#include "gnnx/graph/generators.hpp"
#include "gnnx/tensor/checkpoint.hpp"
#include "gnnx/tensor/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/trained.hpp"

namespace gnnx {
namespace {

using testing::ba2_setup;

bool in_ground_truth(const Dataset& ds, std::size_t i, const Edge& e) {
  const auto& gt = ds.annotations[i]->ground_truth_edges;
  return std::binary_search(gt.begin(), gt.end(), e);
}

ExplainerConfig quick_config(ExplainerFamily family, std::uint64_t seed = 0) {
  ExplainerConfig c = default_explainer_config(family);
  c.seed = seed;
  c.epochs = 10;
  return c;
}

// ---- Gumbel relaxation ----

TEST(Gumbel, SymmetricPointIsExactlyHalf) {
  for (double tau : {0.05, 0.3, 1.0, 7.0}) EXPECT_EQ(gumbel_sample(0.5, tau, 0.5), 0.5);
}

TEST(Gumbel, NeutralNoiseReturnsProbabilityAtUnitTemperature) {
  EXPECT_NEAR(gumbel_sample(0.9, 1.0, 0.5), 0.9, 1e-12);
  EXPECT_NEAR(gumbel_sample(0.2, 1.0, 0.5), 0.2, 1e-12);
}

TEST(Gumbel, LowTemperatureApproachesBernoulli) {
  Rng rng(3);
  for (double p : {0.2, 0.5, 0.8}) {
    int above = 0;
    for (int i = 0; i < 10000; ++i) above += gumbel_sample(p, 0.05, rng) > 0.5;
    EXPECT_NEAR(above / 10000.0, p, 0.02) << "p=" << p;
  }
}

TEST(Gumbel, NonPositiveTemperatureIsDomainError) {
  EXPECT_THROW(gumbel_sample(0.5, 0.0, 0.5), DomainError);
  EXPECT_THROW(gumbel_sample(0.5, -1.0, 0.5), DomainError);
}

TEST(Gumbel, ReparameterisedGradientMatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = testing::random_tensor({12}, rng, 0.05, 0.95);
    const Tensor weights = testing::random_tensor({12}, rng);
    const double tau = rng.uniform(0.2, 2.0);
    const std::uint64_t noise_seed = rng.next_u64();
    auto fn = [&](const std::vector<Tensor>& in) {
      Rng noise(noise_seed);  // same eps on every evaluation
      const Tensor logits = ops::sub(ops::log(in[0]), ops::log(ops::rsub_scalar(1.0, in[0])));
      return ops::sum(ops::mul(weights, gumbel_sample_logits(logits, tau, noise)));
    };
    EXPECT_LE(testing::robust_check({p}, fn, rng).relative_error, 1e-4);
  }
}

TEST(Gumbel, TemperatureAnnealsGeometrically) {
  EXPECT_DOUBLE_EQ(annealed_temperature(1.0, 0.1, 0, 30), 1.0);
  EXPECT_NEAR(annealed_temperature(1.0, 0.1, 29, 30), 0.1, 1e-12);
  for (std::size_t e = 1; e + 1 < 30; ++e) {
    const double a = annealed_temperature(1.0, 0.1, e - 1, 30), b = annealed_temperature(1.0, 0.1, e, 30),
                 c = annealed_temperature(1.0, 0.1, e + 1, 30);
    EXPECT_NEAR(b / a, c / b, 1e-12);
  }
}

// ---- configuration and serialisation ----

TEST(ExplainerConfigTest, TemperatureOrderingIsValidated) {
  ExplainerConfig c;
  c.tau_start = 0.1;
  c.tau_end = 0.5;
  EXPECT_THROW(validate_explainer_config(c), ValidationError);
  c.tau_start = 1.0;
  c.tau_end = 0.0;
  EXPECT_THROW(validate_explainer_config(c), ValidationError);
  c.tau_end = 1.0;
  EXPECT_NO_THROW(validate_explainer_config(c));
}

TEST(ExplainerConfigTest, JsonRoundTrip) {
  ExplainerConfig c = default_explainer_config(ExplainerFamily::kVgae);
  c.constraint = InfoConstraint::soft_size(SizeMetric::kL2, 0.25);
  c.epochs = 7;
  c.latent_dim = 5;
  c.seed = 99;
  c.sample_at_inference = true;
  const ExplainerConfig back = explainer_config_from_json(explainer_config_to_json(c));
  EXPECT_EQ(explainer_config_to_json(back), explainer_config_to_json(c));
  EXPECT_EQ(back.family, ExplainerFamily::kVgae);
  EXPECT_EQ(back.constraint.metric, SizeMetric::kL2);
  EXPECT_EQ(back.latent_dim, 5u);
}

TEST(ExplainerConfigTest, PartialJsonKeepsDefaultsAndUnknownKeysFail) {
  const ExplainerConfig c = explainer_config_from_json(R"({"family": "rl_mdp", "max_steps": 4})");
  EXPECT_EQ(c.family, ExplainerFamily::kRlMdp);
  EXPECT_EQ(c.max_steps, 4u);
  EXPECT_EQ(c.epochs, ExplainerConfig{}.epochs);
  EXPECT_THROW(explainer_config_from_json(R"({"epochz": 3})"), ValidationError);
  EXPECT_THROW(explainer_config_from_json(R"({"family": "gan"})"), ValidationError);
  EXPECT_THROW(explainer_config_from_json("{"), ParseError);
}

TEST(ExplainerConfigTest, FamilyNamesRoundTrip) {
  for (auto f : {ExplainerFamily::kMaskGen, ExplainerFamily::kVgae, ExplainerFamily::kRlMdp, ExplainerFamily::kFlowDag,
                 ExplainerFamily::kCounterfactual, ExplainerFamily::kModelLevel, ExplainerFamily::kSaliency,
                 ExplainerFamily::kRandom}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW(family_from_string("diffusion"), UsageError);
}

TEST(ExplanationMaskTest, HardEdgesFollowTopK) {
  const ExplanationMask m = make_mask({0.9, 0.1, 0.5, 0.5}, 2, 1);
  EXPECT_EQ(m.hard_indices(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(make_mask({0.3, 0.2}, 5, 0).hard_indices().size(), 2u);
  EXPECT_THROW(make_mask({0.3, 1.2}, 1, 0), DomainError);
}

TEST(ExplanationMaskTest, JsonRoundTrip) {
  const Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  const ExplanationMask m = make_mask({0.25, 1.0, 0.0, 0.75}, 2, 1);
  const ExplanationRecord r = explanation_from_json(explanation_to_json(7, g, m, "maskgen", 1.5));
  EXPECT_EQ(r.graph_index, 7u);
  EXPECT_EQ(r.target_label, 1u);
  EXPECT_EQ(r.edge_weights, m.edge_weights);
  EXPECT_EQ(r.hard_edges, (std::vector<Edge>{g.edges[1], g.edges[3]}));
  EXPECT_EQ(r.family, "maskgen");
  EXPECT_DOUBLE_EQ(r.wall_time_ms, 1.5);
  EXPECT_THROW(explanation_from_json(R"({"graph_index": 1})"), ParseError);
  EXPECT_THROW(explanation_to_json(0, g, make_mask({0.5}, 1, 0), "x", 0.0), DimensionError);
}

// ---- factual validity on a fitted model ----

TEST(FactualValidity, GroundTruthMaskKeepsPrediction) {
  const auto& s = ba2_setup();
  ASSERT_EQ(accuracy(*s.model, s.dataset, Split::kTest), 1.0);
  for (std::size_t i : s.dataset.indices(Split::kTest)) {
    const Graph& g = s.dataset.graphs[i];
    std::vector<double> w(g.num_edges(), 0.0);
    for (std::size_t k = 0; k < g.num_edges(); ++k) w[k] = in_ground_truth(s.dataset, i, g.edges[k]) ? 1.0 : 0.0;
    EXPECT_EQ(s.model->predict(g, &w).label, s.model->predict(g).label) << "graph " << i;
  }
}

// ---- mask generator ----

TEST(MaskGen, UntrainedGeneratorIsNearUniform) {
  const auto& s = ba2_setup();
  ExplainerConfig c = quick_config(ExplainerFamily::kMaskGen);
  c.epochs = 0;
  const TrainedExplainer t = train_explainer(s.model, s.dataset, c);
  EXPECT_TRUE(t.log.empty());
  const Graph& g = s.dataset.graphs[s.dataset.indices(Split::kTest).front()];
  const auto w = t.explainer->explain(g, 6).edge_weights;
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  EXPECT_LT(*hi - *lo, 0.25);
}

TEST(MaskGen, ObjectiveDecomposesAndLossDecreases) {
  const auto& s = ba2_setup();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrainedExplainer t = train_explainer(s.model, s.dataset, quick_config(ExplainerFamily::kMaskGen, seed));
    ASSERT_EQ(t.log.size(), 10u);
    for (const TrainLogEntry& e : t.log) EXPECT_NEAR(e.total, e.attr + e.info, 1e-9);
    EXPECT_LT(t.log.back().total, t.log.front().total) << "seed " << seed;
  }
}

TEST(MaskGen, InferenceIsDeterministicAndPure) {
  const auto& s = ba2_setup();
  const TrainedExplainer t = train_explainer(s.model, s.dataset, quick_config(ExplainerFamily::kMaskGen));
  const std::uint64_t model_sum = s.model->params().checksum();
  const std::uint64_t explainer_sum = t.explainer->parameters().checksum();
  for (std::size_t i : s.dataset.indices(Split::kTest)) {
    const Graph& g = s.dataset.graphs[i];
    const ExplanationMask a = t.explainer->explain(g, 6), b = t.explainer->explain(g, 6);
    EXPECT_EQ(a.edge_weights, b.edge_weights);
    EXPECT_EQ(a.hard_indices(), b.hard_indices());
    EXPECT_EQ(a.hard_indices().size(), std::min<std::size_t>(6, g.num_edges()));
    for (double w : a.edge_weights) EXPECT_TRUE(w >= 0.0 && w <= 1.0);
    EXPECT_EQ(a.target_label, s.model->predict(g).label);
  }
  EXPECT_EQ(s.model->params().checksum(), model_sum);
  EXPECT_EQ(t.explainer->parameters().checksum(), explainer_sum);
}

TEST(MaskGen, MotifEdgesOutscoreTheRest) {
  const auto& s = ba2_setup();
  ExplainerConfig c = quick_config(ExplainerFamily::kMaskGen);
  c.epochs = 30;
  const TrainedExplainer t = train_explainer(s.model, s.dataset, c);
  std::size_t better = 0, house_jaccard = 0, houses = 0;
  const auto test = s.dataset.indices(Split::kTest);
  for (std::size_t i : test) {
    const Graph& g = s.dataset.graphs[i];
    const ExplanationMask m = t.explainer->explain(g, 6);
    double in = 0.0, out = 0.0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
      if (in_ground_truth(s.dataset, i, g.edges[k])) {
        in += m.edge_weights[k];
        ++n_in;
      } else {
        out += m.edge_weights[k];
        ++n_out;
      }
    }
    better += in / n_in > out / n_out;
    if (g.label == 1) {
      ++houses;
      std::size_t inter = 0;
      for (std::size_t k : m.hard_indices()) inter += in_ground_truth(s.dataset, i, g.edges[k]);
      const std::size_t uni = n_in + m.hard_indices().size() - inter;
      house_jaccard += static_cast<double>(inter) / static_cast<double>(uni) >= 0.5;
    }
  }
  EXPECT_GE(static_cast<double>(better), 0.9 * static_cast<double>(test.size()));
  EXPECT_GE(static_cast<double>(house_jaccard), 0.8 * static_cast<double>(houses));
}

TEST(MaskGen, EmptyTrainSplitIsDomainError) {
  auto s = ba2_setup();
  for (Split& sp : s.dataset.split) {
    if (sp == Split::kTrain) sp = Split::kTest;
  }
  EXPECT_THROW(train_explainer(s.model, s.dataset, quick_config(ExplainerFamily::kMaskGen)), DomainError);
}

TEST(MaskGen, RestoredParametersReproduceExplanations) {
  const auto& s = ba2_setup();
  const ExplainerConfig c = quick_config(ExplainerFamily::kMaskGen);
  const TrainedExplainer t = train_explainer(s.model, s.dataset, c);
  const ParameterSet back = decode_parameters(encode_parameters(t.explainer->parameters()));
  const auto restored = restore_explainer(c, s.model, back);
  const Graph& g = s.dataset.graphs.front();
  EXPECT_EQ(restored->explain(g, 6).edge_weights, t.explainer->explain(g, 6).edge_weights);
  ExplainerConfig wider = c;
  wider.hidden_dim = c.hidden_dim + 1;
  EXPECT_THROW(restore_explainer(wider, s.model, back), ValidationError);
  ExplainerConfig vgae = c;
  vgae.family = ExplainerFamily::kVgae;
  EXPECT_THROW(restore_explainer(vgae, s.model, back), ValidationError);
}

// ---- VGAE ----

TEST(Vgae, PriorMatchingEncodingHasZeroKl) {
  EXPECT_EQ(gaussian_kl(Tensor::zeros({5, 3}), Tensor::zeros({5, 3})).item(), 0.0);
}

TEST(Vgae, GaussianKlMatchesMonteCarlo) {
  Rng rng(8);
  const Tensor mu = testing::random_tensor({2, 2}, rng, -1.0, 1.0);
  const Tensor logvar = testing::random_tensor({2, 2}, rng, -1.0, 0.5);
  // KL = E_q[log q(z) - log p(z)], estimated with 1e5 draws.
  double mc = 0.0;
  const int n = 100000;
  for (int s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < mu.numel(); ++i) {
      const double sd = std::exp(0.5 * logvar[i]);
      const double eps = rng.normal();
      const double z = mu[i] + sd * eps;
      mc += (-0.5 * eps * eps - std::log(sd)) - (-0.5 * z * z);
    }
  }
  EXPECT_NEAR(mc / n, gaussian_kl(mu, logvar).item(), 1e-2);
}

TEST(Vgae, GaussianKlGradientMatchesFiniteDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor mu = testing::random_tensor({3, 2}, rng), lv = testing::random_tensor({3, 2}, rng);
    auto fn = [](const std::vector<Tensor>& in) { return gaussian_kl(in[0], in[1]); };
    EXPECT_LE(testing::robust_check({mu, lv}, fn, rng).relative_error, 1e-4);
  }
}

TEST(Vgae, DecoderScoresOnlyExistingEdges) {
  const Graph g = make_graph(5, {{0, 1}, {1, 2}, {3, 4}});
  const GraphBatch b = make_batch(g);
  Rng rng(1);
  const Tensor z = testing::random_tensor({5, 4}, rng);
  const Tensor scores = VgaeExplainer::decode(z, b);
  ASSERT_EQ(scores.numel(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    double dot = 0.0;
    for (std::size_t d = 0; d < 4; ++d) dot += z.at(g.edges[k].u, d) * z.at(g.edges[k].v, d);
    EXPECT_NEAR(scores[k], 1.0 / (1.0 + std::exp(-dot)), 1e-12);
  }
}

TEST(Vgae, BeatsRandomBaselineOnFaithfulness) {
  const auto& s = ba2_setup();
  ExplainerConfig c = quick_config(ExplainerFamily::kVgae);
  c.epochs = 30;
  const TrainedExplainer t = train_explainer(s.model, s.dataset, c);
  for (const TrainLogEntry& e : t.log) EXPECT_NEAR(e.total, e.attr + e.info, 1e-9);
  auto faithfulness = [&](auto&& explain) {
    double changed = 0.0;
    const auto test = s.dataset.indices(Split::kTest);
    for (std::size_t i : test) {
      const Graph& g = s.dataset.graphs[i];
      const auto hard = *explain(g).hard_edges;
      const bool a = s.model->predict(g).label == g.label, b = s.model->predict(g, &hard).label == g.label;
      changed += a != b;
    }
    return 1.0 - changed / static_cast<double>(test.size());
  };
  const double vgae = faithfulness([&](const Graph& g) { return t.explainer->explain(g, 6); });
  const double random = faithfulness([&](const Graph& g) { return explain_random(g, 6, 0); });
  EXPECT_GE(vgae - random, 0.2) << "vgae " << vgae << " random " << random;
}

// ---- baselines ----

TEST(Saliency, GradientsMatchFiniteDifferences) {
  // Continuous node features keep the max readout free of ties, where the
  // logit is only one-sidedly differentiable.
  GnnConfig config;
  config.node_feature_dim = 3;
  const GnnModel model = GnnModel::init(config, 21);
  Rng rng(22);
  for (int trial = 0; trial < 5; ++trial) {
    Graph g = gen_ba(12, 2, rng);
    g.node_features = testing::random_tensor({g.num_nodes, 3}, rng);
    const std::size_t target = model.predict(g).label;
    const auto grads = saliency_gradients(model, g);
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
      auto logit = [&](double w_k) {
        std::vector<double> w(g.num_edges(), 1.0);
        w[k] = w_k;
        return model.logits(g, &w)[target];
      };
      const double h = 1e-5;
      // Second-order one-sided stencil: weights above 1 are out of domain.
      const double fd = (3.0 * logit(1.0) - 4.0 * logit(1.0 - h) + logit(1.0 - 2.0 * h)) / (2.0 * h);
      const double scale = std::max({std::abs(fd), grads[k], 1e-6});
      EXPECT_LE(std::abs(std::abs(fd) - grads[k]) / scale, 1e-4) << "trial " << trial << " edge " << k;
    }
  }
}

TEST(Saliency, NormalisationAndFallback) {
  const auto w = normalize_saliency({0.5, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(*std::max_element(w.begin(), w.end()), 1.0);
  EXPECT_DOUBLE_EQ(*std::min_element(w.begin(), w.end()), 0.0);
  EXPECT_EQ(normalize_saliency({0.0, 0.0, 0.0}), (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(RandomBaseline, FullBudgetAndDeterminism) {
  const Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  EXPECT_EQ(explain_random(g, 5, 1).hard_indices().size(), 5u);
  EXPECT_EQ(explain_random(g, 3, 1).edge_weights, explain_random(g, 3, 1).edge_weights);
  EXPECT_NE(explain_random(g, 3, 1).edge_weights, explain_random(g, 3, 2).edge_weights);
}

TEST(RandomBaseline, GroundTruthRecallMatchesHypergeometricMean) {
  const Dataset ds = gen_ba2motifs(1000, 4);
  double recall = 0.0, expected = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Graph& g = ds.graphs[i];
    const auto& gt = ds.annotations[i]->ground_truth_edges;
    std::size_t hit = 0;
    for (std::size_t k : explain_random(g, 6, 17).hard_indices()) hit += std::binary_search(gt.begin(), gt.end(), g.edges[k]);
    recall += static_cast<double>(hit) / static_cast<double>(gt.size());
    expected += 6.0 / static_cast<double>(g.num_edges());
  }
  EXPECT_NEAR(recall / 1000.0, expected / 1000.0, 0.05);
}

}  // namespace
}  // namespace gnnx
