#include "gnnx/explain/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx {

std::vector<double> saliency_gradients(const GnnModel& model, const Graph& graph) {
  if (graph.num_edges() == 0) return {};
  const std::size_t target = model.predict(graph).label;
  const GraphBatch batch = make_batch(graph);
  Tape tape;
  const Tensor w = tape.variable(Tensor::ones({graph.num_edges()}));
  const Tensor logits = model.forward(batch, &w).logits;
  const Tensor grad = tape.backward(ops::sum(ops::pick(logits, std::vector<std::size_t>{target}))).of(w);
  std::vector<double> out(grad.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(grad[i]);
  return out;
}

std::vector<double> normalize_saliency(const std::vector<double>& g) {
  if (g.empty()) return {};
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  if (*hi == *lo) return std::vector<double>(g.size(), 1.0);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] - *lo) / (*hi - *lo);
  return out;
}

SaliencyExplainer::SaliencyExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model)
    : config_(std::move(config)), model_(std::move(model)) {}

ExplanationMask SaliencyExplainer::explain(const Graph& graph, std::size_t k) const {
  return make_mask(normalize_saliency(saliency_gradients(*model_, graph)), k, model_->predict(graph).label);
}

std::vector<double> random_weights(const Graph& graph, std::uint64_t seed) {
  // FNV-1a over the edge list selects the sub-stream.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(graph.num_nodes);
  for (const Edge& e : graph.edges) {
    mix(e.u);
    mix(e.v);
  }
  Rng rng(Rng::derive_seed(seed, h));
  std::vector<double> w(graph.num_edges());
  for (double& v : w) v = rng.uniform();
  return w;
}

ExplanationMask explain_random(const Graph& graph, std::size_t k, std::uint64_t seed) {
  return make_mask(random_weights(graph, seed), k, graph.label.value_or(0));
}

RandomExplainer::RandomExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model)
    : config_(std::move(config)), model_(std::move(model)) {}

ExplanationMask RandomExplainer::explain(const Graph& graph, std::size_t k) const {
  ExplanationMask m = make_mask(random_weights(graph, config_.seed), k, 0);
  if (model_) m.target_label = model_->predict(graph).label;
  return m;
}

}  // namespace gnnx
