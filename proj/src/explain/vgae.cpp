#include "gnnx/explain/vgae.hpp"

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"
#include "gnnx/tensor/optim.hpp"

namespace gnnx {

Tensor gaussian_kl(const Tensor& mu, const Tensor& logvar) {
  if (mu.shape() != logvar.shape()) throw DimensionError("gaussian_kl: mu and logvar shapes differ");
  if (mu.numel() == 0) return Tensor::scalar(0.0);
  const Tensor terms = ops::sub(ops::add(ops::mul(mu, mu), ops::exp(logvar)), ops::add_scalar(logvar, 1.0));
  return ops::mul_scalar(ops::sum(terms), 0.5);
}

VgaeExplainer::VgaeExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params)
    : config_(std::move(config)), model_(std::move(model)), params_(std::move(params)) {}

ParameterSet VgaeExplainer::init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng) {
  const std::size_t emb = model.config().num_layers * model.config().hidden_dim;
  ParameterSet p;
  detail::add_mlp(p, "enc", {emb, config.hidden_dim}, rng);
  detail::add_mlp(p, "mu", {config.hidden_dim, config.latent_dim}, rng);
  detail::add_mlp(p, "logvar", {config.hidden_dim, config.latent_dim}, rng);
  return p;
}

VgaeExplainer::Encoding VgaeExplainer::encode(const ParameterSet& params, const Tensor& embeddings) {
  const Tensor h = ops::relu(detail::mlp(params, "enc", 1, embeddings));
  return {detail::mlp(params, "mu", 1, h), ops::clamp(detail::mlp(params, "logvar", 1, h), -10.0, 10.0)};
}

Tensor VgaeExplainer::decode(const Tensor& z, const GraphBatch& batch) {
  std::vector<std::size_t> u(batch.num_edges), v(batch.num_edges);
  for (std::size_t k = 0; k < batch.num_edges; ++k) {
    u[k] = batch.src[2 * k];
    v[k] = batch.dst[2 * k];
  }
  return ops::sigmoid(ops::sum(ops::mul(ops::gather_rows(z, u), ops::gather_rows(z, v)), 1));
}

ExplanationMask VgaeExplainer::explain(const Graph& graph, std::size_t k) const {
  const std::size_t target = model_->predict(graph).label;
  if (graph.num_edges() == 0) return make_mask({}, k, target);
  const GraphBatch batch = make_batch(graph);
  const Encoding enc = encode(params_, detail::frozen_node_embeddings(*model_, batch));
  return make_mask(decode(enc.mu, batch).values(), k, target);
}

TrainedExplainer train_vgae(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                            const ExplainerConfig& config) {
  validate_explainer_config(config);
  auto indices = detail::train_indices(dataset);
  Rng rng(config.seed);
  rng.shuffle(indices);
  const auto batches = detail::prepare_batches(*model, dataset, indices, config.batch_size);
  ParameterSet params = VgaeExplainer::init_params(*model, config, rng);
  Adam adam({.lr = config.lr});
  std::vector<TrainLogEntry> log;
  std::vector<std::size_t> order(batches.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    TrainLogEntry entry{epoch + 1, 0.0, 0.0, 0.0};
    for (std::size_t bi : order) {
      const auto& pb = batches[bi];
      if (pb.batch.num_edges == 0) continue;
      Tape tape;
      const ParameterSet tracked = params.track(tape);
      const auto enc = VgaeExplainer::encode(tracked, pb.embeddings);
      std::vector<double> noise(enc.mu.numel());
      for (double& e : noise) e = rng.normal();
      // Reparameterised z = mu + sigma * eps.
      const Tensor z = ops::add(enc.mu, ops::mul(ops::exp(ops::mul_scalar(enc.logvar, 0.5)),
                                                 Tensor(enc.mu.shape(), std::move(noise))));
      const Tensor scores = VgaeExplainer::decode(z, pb.batch);
      const Tensor weights = detail::apply_budget(config.constraint, scores, pb.batch);
      const Tensor attr =
          ops::cross_entropy(gnn_forward(model->config(), model->params(), pb.batch, &weights).logits, pb.targets);
      // Latent KL per node, as in the usual graph autoencoder scaling.
      const Tensor latent = ops::mul_scalar(gaussian_kl(enc.mu, enc.logvar),
                                            config.latent_kl_weight / static_cast<double>(pb.batch.num_nodes));
      const Tensor info = ops::add(latent, detail::batch_info_loss(config.constraint, scores, weights, pb.batch));
      const Tensor total = ops::add(attr, info);
      adam.step(params, ParameterSet::gradients(tracked, tape.backward(total)));
      entry.total += total.item();
      entry.attr += attr.item();
      entry.info += info.item();
    }
    const double n = static_cast<double>(batches.size());
    entry.total /= n;
    entry.attr /= n;
    entry.info /= n;
    log.push_back(entry);
  }
  return {std::make_unique<VgaeExplainer>(config, model, std::move(params)), std::move(log)};
}

}  // namespace gnnx
