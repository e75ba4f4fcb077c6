#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gnnx/error.hpp"
#include "gnnx/gnn/train.hpp"
#include "gnnx/graph/generators.hpp"
#include "gnnx/graph/split.hpp"
#include "gnnx/tensor/ops.hpp"
#include "support/gradcheck.hpp"

namespace gnnx {
namespace {

GnnConfig small_config(LayerKind kind, std::size_t node_dim = 1) {
  GnnConfig c;
  c.layer_kind = kind;
  c.hidden_dim = 8;
  c.node_feature_dim = node_dim;
  return c;
}

Graph random_graph(std::uint64_t seed, std::size_t node_dim = 1) {
  Rng rng(seed);
  Graph g = gen_ba(12, 2, rng);
  g.node_features = testing::random_tensor({g.num_nodes, node_dim}, rng);
  g.edge_features = testing::random_tensor({g.num_edges(), 1}, rng);
  return g;
}

// Random parameters with non-zero biases and epsilons so no term is trivially
// inactive.
ParameterSet perturbed(const GnnConfig& c, std::uint64_t seed) {
  ParameterSet p = init_gnn_params(c, seed);
  Rng rng(seed + 1);
  ParameterSet out;
  for (const auto& [name, t] : p) {
    std::vector<double> v = t.values();
    for (double& x : v) x += rng.uniform(-0.3, 0.3);
    out.set(name, Tensor(t.shape(), v));
  }
  return out;
}

class BothKinds : public ::testing::TestWithParam<LayerKind> {};

TEST_P(BothKinds, AllOnesWeightsMatchUnweighted) {
  const GnnConfig c = small_config(GetParam(), 3);
  const GnnModel m(c, perturbed(c, 1));
  const Graph g = random_graph(2, 3);
  const std::vector<double> ones(g.num_edges(), 1.0);
  const Tensor a = m.logits(g), b = m.logits(g, &ones);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST_P(BothKinds, ZeroWeightsMatchEdgelessGraph) {
  const GnnConfig c = small_config(GetParam(), 3);
  const GnnModel m(c, perturbed(c, 3));
  const Graph g = random_graph(4, 3);
  Graph edgeless = g;
  edgeless.edges.clear();
  edgeless.edge_features = Tensor::zeros({0, 1});
  const std::vector<double> zeros(g.num_edges(), 0.0);
  const Tensor a = m.logits(g, &zeros), b = m.logits(edgeless);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST_P(BothKinds, WeightOutsideUnitIntervalIsDomainError) {
  const GnnConfig c = small_config(GetParam());
  const GnnModel m = GnnModel::init(c, 0);
  const Graph g = random_graph(5);
  std::vector<double> w(g.num_edges(), 0.5);
  w[3] = 1.5;
  EXPECT_THROW(m.logits(g, &w), DomainError);
  w[3] = -0.1;
  EXPECT_THROW(m.logits(g, &w), DomainError);
}

TEST_P(BothKinds, EdgeWeightGradientMatchesFiniteDifferences) {
  const GnnConfig c = small_config(GetParam(), 2);
  Rng rng(6);
  std::size_t fallbacks = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const ParameterSet p = perturbed(c, 10 + trial);
    const Graph g = random_graph(30 + trial, 2);
    const GraphBatch batch = make_batch(g);
    const Tensor w0 = testing::random_tensor({g.num_edges()}, rng, 0.1, 0.9);
    const std::size_t target = trial % 2;
    auto fn = [&](const std::vector<Tensor>& in) {
      const Tensor logits = gnn_forward(c, p, batch, &in[0]).logits;
      return ops::sum(ops::pick(logits, std::vector<std::size_t>{target}));
    };
    Rng replay = rng;
    auto r = testing::directional_check({w0}, fn, rng);
    if (r.relative_error > 1e-4) {
      ++fallbacks;
      r = testing::directional_check({w0}, fn, replay, 1e-7);
    }
    EXPECT_LE(r.relative_error, 1e-4) << "trial " << trial;
  }
  EXPECT_LE(fallbacks, 3u);
}

TEST_P(BothKinds, ParameterGradientMatchesFiniteDifferences) {
  const GnnConfig c = small_config(GetParam(), 2);
  const ParameterSet p = perturbed(c, 40);
  const Graph g = random_graph(41, 2);
  const GraphBatch batch = make_batch(g);
  std::vector<std::string> names;
  std::vector<Tensor> values;
  for (const auto& [name, t] : p) {
    // BatchNorm running statistics are buffers, not trainable parameters.
    if (name.find(".running_") != std::string::npos) continue;
    names.push_back(name);
    values.push_back(t);
  }
  Rng rng(42);
  const Tensor readout = testing::random_tensor({1, c.num_classes}, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = testing::robust_check(values,
                                         [&](const std::vector<Tensor>& in) {
                                           ParameterSet q = p;
                                           for (std::size_t i = 0; i < in.size(); ++i) q.set(names[i], in[i]);
                                           // A linear read-out of the logits; cross-entropy saturates
                                           // at these weights and leaves nothing to compare.
                                           const Tensor logits = gnn_forward(c, q, batch).logits;
                                           return ops::sum(ops::mul(logits, readout));
                                         },
                                         rng);
    EXPECT_LE(r.relative_error, 1e-4);
  }
}

TEST_P(BothKinds, PermutationInvariance) {
  const GnnConfig c = small_config(GetParam(), 3);
  const GnnModel m(c, perturbed(c, 7));
  const Graph g = random_graph(8, 3);
  Rng rng(9);
  std::vector<std::size_t> perm(g.num_nodes);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<Edge> edges;
  for (const Edge& e : g.edges) edges.push_back({perm[e.u], perm[e.v]});
  Graph h = make_graph(g.num_nodes, edges, 3);
  std::vector<double> xn(g.num_nodes * 3);
  for (std::size_t v = 0; v < g.num_nodes; ++v)
    for (std::size_t k = 0; k < 3; ++k) xn[perm[v] * 3 + k] = g.node_features.at(v, k);
  h.node_features = Tensor({g.num_nodes, 3}, xn);
  std::vector<double> xe(g.num_edges());
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    xe[*h.find_edge(Edge::canonical(perm[g.edges[k].u], perm[g.edges[k].v]))] = g.edge_features[k];
  }
  h.edge_features = Tensor({g.num_edges(), 1}, xe);
  const Tensor a = m.logits(g), b = m.logits(h);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST_P(BothKinds, MaskContinuity) {
  const GnnConfig c = small_config(GetParam(), 2);
  const GnnModel m(c, perturbed(c, 11));
  const Graph g = random_graph(12, 2);
  std::vector<double> w(g.num_edges(), 0.5);
  const Tensor base = m.logits(g, &w);
  for (double eps : {1e-3, 1e-5, 1e-7}) {
    w[0] = 0.5 + eps;
    const Tensor moved = m.logits(g, &w);
    for (std::size_t i = 0; i < base.numel(); ++i) EXPECT_LE(std::abs(moved[i] - base[i]), 100.0 * eps);
  }
}

TEST_P(BothKinds, BatchedMatchesSingle) {
  const GnnConfig c = small_config(GetParam(), 2);
  const GnnModel m(c, perturbed(c, 13));
  const Graph g1 = random_graph(14, 2), g2 = random_graph(15, 2);
  const GnnOutput out = m.forward(make_batch({&g1, &g2}));
  const Tensor a = m.logits(g1), b = m.logits(g2);
  EXPECT_NEAR(out.logits.at(0, 0), a[0], 1e-12);
  EXPECT_NEAR(out.logits.at(1, 1), b[1], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Layers, BothKinds, ::testing::Values(LayerKind::kGin, LayerKind::kGcn),
                         [](const auto& info) { return to_string(info.param); });

TEST(GcnNormalization, MatchesDenseOracle) {
  // One GCN layer with identity weight: out = relu(D^-1/2 (A_w + I) D^-1/2 X).
  GnnConfig c = small_config(LayerKind::kGcn, 2);
  c.hidden_dim = 2;
  c.num_layers = 1;
  ParameterSet p = init_gnn_params(c, 0);
  p.set("gcn0.weight", Tensor::matrix({{1, 0}, {0, 1}}));
  const Graph g = [] {
    Graph h = make_graph(3, {{0, 1}, {1, 2}}, 2);
    h.node_features = Tensor::matrix({{1, 2}, {3, 1}, {0.5, 4}});
    return h;
  }();
  const std::vector<double> w{0.4, 0.9};
  const Tensor wt = Tensor::vector(w);
  const Tensor h = gnn_forward(c, p, make_batch(g), &wt).layer_nodes[0];
  double a[3][3] = {{1, 0.4, 0}, {0.4, 1, 0.9}, {0, 0.9, 1}};
  double d[3];
  for (int i = 0; i < 3; ++i) d[i] = a[i][0] + a[i][1] + a[i][2];
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 2; ++k) {
      double v = 0;
      for (int j = 0; j < 3; ++j) v += a[i][j] / std::sqrt(d[i] * d[j]) * g.node_features.at(j, k);
      EXPECT_NEAR(h.at(i, k), std::max(v, 0.0), 1e-12);
    }
  }
}

TEST(Predict, TieBreakAndSymmetry) {
  const std::vector<double> tie{2.0, 2.0};
  EXPECT_EQ(prediction_from_logits(tie).label, 0u);
  const std::vector<double> zero{0.0, 0.0};
  const Prediction p = prediction_from_logits(zero);
  EXPECT_DOUBLE_EQ(p.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(p.probs[1], 0.5);
  const std::vector<double> big{1000.0, -1000.0, 3.0};
  const Prediction q = prediction_from_logits(big);
  EXPECT_NEAR(q.probs[0] + q.probs[1] + q.probs[2], 1.0, 1e-9);
}

TEST(Model, CheckpointRoundTripKeepsConfig) {
  GnnConfig c = small_config(LayerKind::kGin);
  c.num_layers = 3;
  const GnnModel m = GnnModel::init(c, 5);
  const auto path = std::filesystem::temp_directory_path() / "gnnx_model_test" / "model.bin";
  save_model(m, path);
  const GnnModel back = load_model(path);
  EXPECT_EQ(back.config().layer_kind, LayerKind::kGin);
  EXPECT_EQ(back.config().num_layers, 3u);
  EXPECT_EQ(back.params().checksum(), m.params().checksum());
  std::filesystem::remove_all(path.parent_path());
}

TEST(Model, ShapeMismatchRejected) {
  const GnnConfig c = small_config(LayerKind::kGin);
  ParameterSet p = init_gnn_params(c, 0);
  p.set("head.bias", Tensor::zeros({5}));
  EXPECT_THROW(GnnModel(c, p), ValidationError);
}

Dataset tiny_split_dataset(std::uint64_t seed) { return split_dataset(gen_ba2motifs(100, seed), {}, seed); }

TEST(Train, SingleClassTrainingIsDomainError) {
  Dataset ds = tiny_split_dataset(0);
  for (auto& g : ds.graphs) g.label = 0;
  EXPECT_THROW(train_base(ds, small_config(LayerKind::kGin), 0), DomainError);
}

TEST(Train, RelabelledToOneClassGivesHalfAccuracyOnBalancedTest) {
  const Dataset original = tiny_split_dataset(1);
  Dataset relabelled = original;
  for (std::size_t i : relabelled.indices(Split::kTrain)) relabelled.graphs[i].label = 0;
  for (std::size_t i : relabelled.indices(Split::kVal)) relabelled.graphs[i].label = 0;
  GnnConfig c = small_config(LayerKind::kGin);
  c.max_epochs = 30;
  c.allow_degenerate_labels = true;
  const TrainResult r = train_base(relabelled, c, 0);
  EXPECT_DOUBLE_EQ(accuracy(r.model, original, Split::kTest), 0.5);
}

TEST(Train, HistoryAndEarlyStop) {
  GnnConfig c = small_config(LayerKind::kGin);
  c.max_epochs = 40;
  c.patience = 3;
  const TrainResult r = train_base(tiny_split_dataset(2), c, 0);
  ASSERT_FALSE(r.history.empty());
  EXPECT_LE(r.history.size(), 40u);
  EXPECT_GE(r.best_epoch, 1u);
  if (r.history.size() < 40) EXPECT_EQ(r.history.size(), r.best_epoch + 3);
  const std::string csv = history_to_csv(r.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,val_loss,val_acc");
}

TEST(Accuracy, MatchesConfusionMatrixOracle) {
  const Dataset ds = tiny_split_dataset(3);
  const GnnModel m(small_config(LayerKind::kGin), perturbed(small_config(LayerKind::kGin), 4));
  std::size_t confusion[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i : ds.indices(Split::kTest)) ++confusion[*ds.graphs[i].label][m.predict(ds.graphs[i]).label];
  const double total = static_cast<double>(confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]);
  EXPECT_DOUBLE_EQ(accuracy(m, ds, Split::kTest), static_cast<double>(confusion[0][0] + confusion[1][1]) / total);
}

TEST(Accuracy, EmptySplitIsDomainError) {
  const Dataset ds = tiny_split_dataset(3);
  EXPECT_THROW(accuracy(GnnModel::init(small_config(LayerKind::kGin), 0), ds, Split::kUnseen), DomainError);
}

}  // namespace
}  // namespace gnnx
