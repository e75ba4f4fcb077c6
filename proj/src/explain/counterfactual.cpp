#include "gnnx/explain/counterfactual.hpp"

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

void require_multiclass(const GnnModel& model) {
  if (model.config().num_classes < 2) throw DomainError("counterfactual explanation needs at least two classes");
}

}  // namespace

CounterfactualExplainer::CounterfactualExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model,
                                                 ParameterSet params)
    : config_(std::move(config)), generator_(std::move(model), std::move(params)) {
  require_multiclass(generator_.model());
}

CounterfactualResult CounterfactualExplainer::counterfactual(const Graph& graph, std::size_t budget) const {
  const GnnModel& model = generator_.model();
  const Prediction original = model.predict(graph);
  CounterfactualResult r;
  r.original_label = original.label;
  r.new_label = original.label;
  r.target_label = detail::runner_up(original.probs);
  r.deletion_scores = generator_.edge_probs(graph);
  r.retained.assign(graph.num_edges(), 1.0);
  if (graph.num_edges() == 0 || budget == 0) return r;

  const auto ranking = top_k_indices(r.deletion_scores, budget);
  std::vector<std::vector<double>> masks;
  std::vector<double> m(graph.num_edges(), 1.0);
  for (std::size_t e : ranking) {
    m[e] = 0.0;
    masks.push_back(m);
  }
  const auto preds = model.predict_masks(graph, masks);
  std::size_t len = ranking.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label != original.label) {
      len = i + 1;
      break;
    }
  }
  r.deleted.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(len));
  r.retained = masks[len - 1];
  r.new_label = preds[len - 1].label;
  return r;
}

ExplanationMask CounterfactualExplainer::explain(const Graph& graph, std::size_t k) const {
  CounterfactualResult r = counterfactual(graph, k);
  ExplanationMask mask;
  mask.edge_weights = std::move(r.deletion_scores);
  std::vector<double> hard(graph.num_edges(), 0.0);
  for (std::size_t e : r.deleted) hard[e] = 1.0;
  mask.hard_edges = std::move(hard);
  mask.target_label = r.target_label;
  return mask;
}

TrainedExplainer train_counterfactual(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                      const ExplainerConfig& config) {
  require_multiclass(*model);
  auto indices = detail::train_indices(dataset);
  Rng(config.seed ^ 0x9e3779b97f4a7c15ULL).shuffle(indices);
  auto batches = detail::prepare_batches(*model, dataset, indices, config.batch_size);
  for (auto& pb : batches) {
    for (std::size_t g = 0; g < pb.graph_index.size(); ++g) {
      pb.targets[g] = detail::runner_up(model->predict(dataset.graphs[pb.graph_index[g]]).probs);
    }
  }
  auto result = train_mask_generator(*model, std::move(batches), config, MaskObjective::kCounterfactual);
  return {std::make_unique<CounterfactualExplainer>(config, model, std::move(result.params)), std::move(result.log)};
}

}  // namespace gnnx
