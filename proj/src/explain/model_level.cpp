#include "gnnx/explain/model_level.hpp"

#include <map>

#include "gnnx/error.hpp"
#include "gnnx/graph/canonical.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx {

ModelLevelExplainer::ModelLevelExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model,
                                         ParameterSet params)
    : config_(std::move(config)), generator_(std::move(model), std::move(params)) {}

ExplanationMask ModelLevelExplainer::explain(const Graph& graph, std::size_t k) const {
  return make_mask(generator_.edge_probs(graph), k, config_.target_class);
}

ModelLevelResult ModelLevelExplainer::summarize(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                std::size_t k) const {
  if (indices.empty()) throw DomainError("model-level summary: no instances");
  struct Vote {
    std::size_t count = 0;
    std::size_t first = 0;  // position in `indices`
    std::vector<Edge> edges;
  };
  std::map<std::string, Vote> votes;
  for (std::size_t pos = 0; pos < indices.size(); ++pos) {
    const Graph& g = dataset.graphs[indices[pos]];
    if (g.num_edges() == 0) continue;
    std::vector<Edge> edges;
    for (std::size_t e : explain(g, k).hard_indices()) edges.push_back(g.edges[e]);
    auto [it, inserted] = votes.try_emplace(canonical_form(edges));
    if (inserted) {
      it->second.first = pos;
      it->second.edges = edges;
    }
    ++it->second.count;
  }
  if (votes.empty()) throw DomainError("model-level summary: every instance is edgeless");
  const std::pair<const std::string, Vote>* best = nullptr;
  for (const auto& entry : votes) {
    if (!best || entry.second.count > best->second.count ||
        (entry.second.count == best->second.count && entry.second.first < best->second.first)) {
      best = &entry;
    }
  }
  ModelLevelResult r;
  r.target_class = config_.target_class;
  r.canonical = best->first;
  r.support = best->second.count;
  r.instances = indices.size();
  r.representative = indices[best->second.first];
  r.representative_edges = best->second.edges;

  std::vector<std::size_t> ids;
  const std::vector<Edge> compact = compact_edges(r.representative_edges, &ids);
  const Graph& source = dataset.graphs[r.representative];
  r.subgraph = make_graph(ids.size(), compact, source.node_feature_dim(), source.edge_feature_dim(), config_.target_class);
  r.subgraph.node_features = ops::gather_rows(source.node_features, ids);
  std::vector<std::size_t> edge_rows;
  for (const Edge& e : r.representative_edges) edge_rows.push_back(*source.find_edge(e));
  // compact_edges keeps the relative order of ids, so sorted source edges map to sorted compact edges.
  r.subgraph.edge_features = ops::gather_rows(source.edge_features, edge_rows);
  return r;
}

std::vector<std::size_t> class_indices(const Dataset& dataset, std::size_t c) {
  std::vector<std::size_t> out;
  for (std::size_t i : dataset.indices(Split::kTrain)) {
    if (dataset.graphs[i].label == c) out.push_back(i);
  }
  if (out.empty()) throw DomainError("model-level explanation: no train graphs of class " + std::to_string(c));
  return out;
}

TrainedExplainer train_model_level(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                   const ExplainerConfig& config) {
  if (config.target_class >= model->config().num_classes) {
    throw DomainError("model-level explanation: class " + std::to_string(config.target_class) + " out of range");
  }
  auto indices = class_indices(dataset, config.target_class);
  Rng(config.seed ^ 0x9e3779b97f4a7c15ULL).shuffle(indices);
  auto batches = detail::prepare_batches(*model, dataset, indices, config.batch_size);
  for (auto& pb : batches) pb.targets.assign(pb.targets.size(), config.target_class);
  auto result = train_mask_generator(*model, std::move(batches), config, MaskObjective::kFactual);
  return {std::make_unique<ModelLevelExplainer>(config, model, std::move(result.params)), std::move(result.log)};
}

ModelLevelResult model_level_generate(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                      const ExplainerConfig& config) {
  TrainedExplainer trained = train_model_level(model, dataset, config);
  const auto& explainer = static_cast<const ModelLevelExplainer&>(*trained.explainer);
  return explainer.summarize(dataset, class_indices(dataset, config.target_class), config.explain_k);
}

}  // namespace gnnx
