#include "gnnx/explain/rl_mdp.hpp"

#include <algorithm>
#include <cmath>

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"
#include "gnnx/tensor/optim.hpp"

namespace gnnx {
namespace {

std::size_t embedding_dim(const GnnModel& model) {
  return model.config().num_layers * model.config().hidden_dim;
}

std::vector<double> softmax_values(const Tensor& log_probs) {
  std::vector<double> p(log_probs.numel());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_probs[i]);
  return p;
}

// Runs one episode from `start`; when `log_probs` is given the chosen
// actions' log-probabilities are collected (tracked if params are).
std::vector<std::size_t> run_episode(const ParameterSet& params, const Graph& graph, const std::vector<double>& emb,
                                     std::size_t dim, std::size_t start, std::size_t max_steps, Rng* rng,
                                     std::vector<Tensor>* log_probs) {
  detail::EdgeGrowth growth(graph);
  growth.reset_at(start);
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto frontier = growth.frontier();
    if (frontier.empty()) break;
    const Tensor lp = PolicyAgent::log_policy(params, graph, emb, dim, growth.node_in(), frontier);
    std::size_t a = 0;
    if (rng) {
      a = rng->categorical(softmax_values(lp));
    } else {
      a = static_cast<std::size_t>(std::max_element(lp.data().begin(), lp.data().end()) - lp.data().begin());
    }
    if (log_probs) {
      const std::size_t idx[] = {a};
      log_probs->push_back(ops::sum(ops::pick(ops::reshape(lp, {1, frontier.size()}), idx)));
    }
    growth.add(frontier[a]);
  }
  return growth.chosen();
}

std::size_t random_start(const Graph& graph, Rng& rng) {
  const Edge& e = graph.edges[rng.below(graph.num_edges())];
  return rng.below(2) == 0 ? e.u : e.v;
}

// P_f[target] for every prefix of the trajectory, including the empty one.
std::vector<double> prefix_probs(const GnnModel& model, const Graph& graph, const std::vector<std::size_t>& actions,
                                 std::size_t target) {
  std::vector<std::vector<double>> masks(actions.size() + 1, std::vector<double>(graph.num_edges(), 0.0));
  for (std::size_t k = 1; k <= actions.size(); ++k) {
    masks[k] = masks[k - 1];
    masks[k][actions[k - 1]] = 1.0;
  }
  std::vector<double> out;
  for (const Prediction& p : model.predict_masks(graph, masks)) out.push_back(p.probs[target]);
  return out;
}

}  // namespace

PolicyAgent::PolicyAgent(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params)
    : config_(std::move(config)), model_(std::move(model)), params_(std::move(params)) {
  if (!model_) throw ContractError("PolicyAgent: no base model");
}

ParameterSet PolicyAgent::init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng) {
  ParameterSet p;
  detail::add_mlp(p, "policy", {2 * embedding_dim(model), config.hidden_dim, 1}, rng);
  return p;
}

Tensor PolicyAgent::log_policy(const ParameterSet& params, const Graph& graph, const std::vector<double>& emb,
                               std::size_t dim, const std::vector<bool>& node_in,
                               const std::vector<std::size_t>& candidates) {
  const Tensor features = detail::action_features(graph, emb, dim, node_in, candidates);
  const Tensor scores = detail::mlp(params, "policy", 2, features);  // [F x 1]
  return ops::reshape(ops::log_softmax_rows(ops::reshape(scores, {1, candidates.size()})), {candidates.size()});
}

std::vector<double> PolicyAgent::action_probs(const Graph& graph, const std::vector<std::size_t>& chosen,
                                              std::size_t start_node) const {
  std::size_t dim = 0;
  const auto emb = detail::graph_embeddings(*model_, graph, &dim);
  detail::EdgeGrowth growth(graph);
  growth.reset_at(start_node);
  for (std::size_t e : chosen) growth.add(e);
  const auto frontier = growth.frontier();
  if (frontier.empty()) return {};
  return softmax_values(log_policy(params_, graph, emb, dim, growth.node_in(), frontier));
}

std::vector<std::size_t> PolicyAgent::greedy_trajectory(const Graph& graph, std::size_t start_node) const {
  std::size_t dim = 0;
  const auto emb = detail::graph_embeddings(*model_, graph, &dim);
  return run_episode(params_, graph, emb, dim, start_node, config_.max_steps, nullptr, nullptr);
}

std::vector<double> trajectory_weights(std::size_t num_edges, const std::vector<std::size_t>& trajectory) {
  std::vector<double> w(num_edges, 0.0);
  const double t = static_cast<double>(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) w[trajectory[i]] = 1.0 - static_cast<double>(i) / (2.0 * t);
  return w;
}

ExplanationMask PolicyAgent::explain(const Graph& graph, std::size_t k) const {
  const std::size_t target = model_->predict(graph).label;
  if (graph.num_edges() == 0) return make_mask({}, k, target);
  const std::size_t steps = k > 0 ? k : config_.max_steps;
  std::size_t dim = 0;
  const auto emb = detail::graph_embeddings(*model_, graph, &dim);
  std::vector<bool> has_edge(graph.num_nodes, false);
  for (const Edge& e : graph.edges) has_edge[e.u] = has_edge[e.v] = true;
  std::vector<std::vector<std::size_t>> trajectories;
  std::vector<std::vector<double>> masks;
  for (std::size_t v = 0; v < graph.num_nodes; ++v) {
    if (!has_edge[v]) continue;
    trajectories.push_back(run_episode(params_, graph, emb, dim, v, steps, nullptr, nullptr));
    std::vector<double> m(graph.num_edges(), 0.0);
    for (std::size_t e : trajectories.back()) m[e] = 1.0;
    masks.push_back(std::move(m));
  }
  const auto preds = model_->predict_masks(graph, masks);
  std::size_t best = 0;
  for (std::size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].probs[target] > preds[best].probs[target]) best = i;
  }
  return make_mask(trajectory_weights(graph.num_edges(), trajectories[best]), k, target);
}

Episode sample_episode(const GnnModel& model, const ParameterSet& params, const Graph& graph,
                       const std::vector<double>& emb, std::size_t dim, std::size_t target, std::size_t max_steps,
                       Rng& rng) {
  if (graph.num_edges() == 0) return {};
  Episode ep;
  ep.actions = run_episode(params, graph, emb, dim, random_start(graph, rng), max_steps, &rng, nullptr);
  const auto p = prefix_probs(model, graph, ep.actions, target);
  for (std::size_t k = 1; k < p.size(); ++k) ep.rewards.push_back(p[k] - p[k - 1]);
  return ep;
}

TrainedExplainer train_rl_mdp(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                              const ExplainerConfig& config) {
  validate_explainer_config(config);
  auto indices = detail::train_indices(dataset);
  Rng rng(config.seed);
  ParameterSet params = PolicyAgent::init_params(*model, config, rng);

  struct Prepared {
    std::vector<double> emb;
    std::size_t target;
  };
  std::vector<Prepared> prepared;
  std::size_t dim = 0;
  for (std::size_t i : indices) {
    const Graph& g = dataset.graphs[i];
    prepared.push_back({detail::graph_embeddings(*model, g, &dim), model->predict(g).label});
  }

  Adam adam({.lr = config.lr});
  std::vector<std::size_t> order(indices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<TrainLogEntry> log;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    TrainLogEntry entry{epoch + 1, 0.0, 0.0, 0.0, 0.0};
    std::size_t episodes = 0, batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      Tape tape;
      const ParameterSet tracked = params.track(tape);
      Tensor loss = Tensor::scalar(0.0);
      std::size_t batch_episodes = 0;
      for (std::size_t j = start; j < std::min(order.size(), start + config.batch_size); ++j) {
        const Graph& g = dataset.graphs[indices[order[j]]];
        if (g.num_edges() == 0) continue;
        const Prepared& pr = prepared[order[j]];
        for (std::size_t e = 0; e < config.episodes_per_graph; ++e) {
          std::vector<Tensor> log_probs;
          const auto actions =
              run_episode(tracked, g, pr.emb, dim, random_start(g, rng), config.max_steps, &rng, &log_probs);
          const auto p = prefix_probs(*model, g, actions, pr.target);
          for (std::size_t k = 0; k < actions.size(); ++k) {
            loss = ops::sub(loss, ops::mul_scalar(log_probs[k], p[k + 1] - p[k]));
          }
          entry.reward += p.back() - p.front();
          ++batch_episodes;
        }
      }
      if (batch_episodes == 0) continue;
      loss = ops::mul_scalar(loss, 1.0 / static_cast<double>(batch_episodes));
      adam.step(params, ParameterSet::gradients(tracked, tape.backward(loss)));
      entry.attr += loss.item();
      episodes += batch_episodes;
      ++batches;
    }
    if (batches > 0) entry.attr /= static_cast<double>(batches);
    if (episodes > 0) entry.reward /= static_cast<double>(episodes);
    entry.total = entry.attr;
    log.push_back(entry);
  }
  return {std::make_unique<PolicyAgent>(config, model, std::move(params)), std::move(log)};
}

}  // namespace gnnx
