#include "gnnx/explain/maskgen.hpp"

#include "gnnx/error.hpp"
#include "gnnx/explain/gumbel.hpp"
#include "gnnx/tensor/ops.hpp"
#include "gnnx/tensor/optim.hpp"

namespace gnnx {

MaskGenerator::MaskGenerator(std::shared_ptr<const GnnModel> model, ParameterSet params)
    : model_(std::move(model)), params_(std::move(params)) {
  if (!model_) throw ContractError("MaskGenerator: no base model");
}

ParameterSet MaskGenerator::init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng,
                                        double initial_logit) {
  const std::size_t emb = model.config().num_layers * model.config().hidden_dim;
  ParameterSet p;
  detail::add_mlp(p, "edge_mlp", {2 * emb, config.hidden_dim, 1}, rng);
  p.set("edge_mlp.l1.bias", Tensor::full({1}, initial_logit));
  return p;
}

Tensor MaskGenerator::edge_logits(const ParameterSet& params, const Tensor& embeddings, const GraphBatch& batch) {
  const Tensor features = detail::edge_pair_features(embeddings, batch);
  return ops::reshape(detail::mlp(params, "edge_mlp", 2, features), {batch.num_edges});
}

std::vector<double> MaskGenerator::edge_probs(const Graph& graph) const {
  if (graph.num_edges() == 0) return {};
  const GraphBatch batch = make_batch(graph);
  return ops::sigmoid(edge_logits(params_, detail::frozen_node_embeddings(*model_, batch), batch)).values();
}

MaskTrainResult train_mask_generator(const GnnModel& model, std::vector<detail::PreparedBatch> batches,
                                     const ExplainerConfig& config, MaskObjective objective) {
  validate_explainer_config(config);
  if (batches.empty()) throw DomainError("mask generator training: no training graphs");
  Rng rng(config.seed);
  MaskTrainResult result;
  // Start near the input graph: factual masks keep most edges, deletion
  // masks remove few. The constraint and the target then reshape it.
  result.params = MaskGenerator::init_params(model, config, rng, objective == MaskObjective::kFactual ? 2.0 : -2.0);
  Adam adam({.lr = config.lr});
  std::vector<std::size_t> order(batches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = annealed_temperature(config.tau_start, config.tau_end, epoch, config.epochs);
    rng.shuffle(order);
    TrainLogEntry entry{epoch + 1, 0.0, 0.0, 0.0};
    for (std::size_t bi : order) {
      const detail::PreparedBatch& pb = batches[bi];
      if (pb.batch.num_edges == 0) continue;
      Tape tape;
      const ParameterSet tracked = result.params.track(tape);
      const Tensor logits = MaskGenerator::edge_logits(tracked, pb.embeddings, pb.batch);
      const Tensor probs = ops::sigmoid(logits);
      Tensor sample = gumbel_sample_logits(logits, tau, rng);
      if (edge_budget(config.constraint, 1)) {
        sample = detail::apply_budget(config.constraint, sample, pb.batch);
      } else if (config.hard_samples) {
        sample = round_straight_through(sample);
      }
      const Tensor weights = objective == MaskObjective::kFactual ? sample : ops::rsub_scalar(1.0, sample);
      const Tensor attr =
          ops::cross_entropy(gnn_forward(model.config(), model.params(), pb.batch, &weights).logits, pb.targets);
      // The constraint sees the expected retained graph, which keeps its
      // gradient alive when samples saturate.
      const Tensor expected = objective == MaskObjective::kFactual ? probs : ops::rsub_scalar(1.0, probs);
      const Tensor info = detail::batch_info_loss(config.constraint, probs, expected, pb.batch);
      const Tensor total = ops::add(attr, info);
      adam.step(result.params, ParameterSet::gradients(tracked, tape.backward(total)));
      entry.total += total.item();
      entry.attr += attr.item();
      entry.info += info.item();
    }
    const double n = static_cast<double>(batches.size());
    entry.total /= n;
    entry.attr /= n;
    entry.info /= n;
    result.log.push_back(entry);
  }
  return result;
}

MaskGenExplainer::MaskGenExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params)
    : config_(std::move(config)), generator_(std::move(model), std::move(params)) {}

ExplanationMask MaskGenExplainer::explain(const Graph& graph, std::size_t k) const {
  std::vector<double> weights = generator_.edge_probs(graph);
  if (config_.sample_at_inference) {
    Rng rng(config_.seed);
    for (double& w : weights) w = gumbel_sample(w, config_.tau_end, rng);
  }
  return make_mask(std::move(weights), k, generator_.model().predict(graph).label);
}

TrainedExplainer train_maskgen(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                               const ExplainerConfig& config) {
  auto indices = detail::train_indices(dataset);
  Rng(config.seed ^ 0x9e3779b97f4a7c15ULL).shuffle(indices);
  auto result = train_mask_generator(*model, detail::prepare_batches(*model, dataset, indices, config.batch_size),
                                     config, MaskObjective::kFactual);
  return {std::make_unique<MaskGenExplainer>(config, model, std::move(result.params)), std::move(result.log)};
}

}  // namespace gnnx
