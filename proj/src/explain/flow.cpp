#include "gnnx/explain/flow.hpp"

#include <algorithm>
#include <numeric>

#include "gnnx/error.hpp"
#include "gnnx/explain/rl_mdp.hpp"
#include "gnnx/tensor/ops.hpp"
#include "gnnx/tensor/optim.hpp"

namespace gnnx {

DagEnvironment::DagEnvironment(std::vector<Transition> transitions, std::map<std::size_t, double> rewards)
    : transitions_(std::move(transitions)), rewards_(std::move(rewards)) {
  for (const auto& [state, r] : rewards_) {
    if (!(r > 0.0)) throw DomainError("DagEnvironment: terminal rewards must be positive");
    for (const Transition& t : transitions_) {
      if (t.from == state) throw DomainError("DagEnvironment: terminal state " + std::to_string(state) + " has actions");
    }
  }
  for (const Transition& t : transitions_) {
    if (!rewards_.count(t.to) &&
        std::none_of(transitions_.begin(), transitions_.end(), [&](const Transition& u) { return u.from == t.to; })) {
      throw DomainError("DagEnvironment: state " + std::to_string(t.to) + " is a dead end without reward");
    }
  }
}

std::size_t DagEnvironment::transition_index(std::size_t from, std::size_t action) const {
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    if (transitions_[i].from == from && transitions_[i].action == action) return i;
  }
  throw DomainError("DagEnvironment: no action " + std::to_string(action) + " from state " + std::to_string(from));
}

std::vector<std::size_t> DagEnvironment::actions(const FlowState& s) const {
  std::vector<std::size_t> out;
  for (const Transition& t : transitions_) {
    if (t.from == s.at(0)) out.push_back(t.action);
  }
  return out;
}

FlowState DagEnvironment::apply(const FlowState& s, std::size_t action) const {
  return {transitions_[transition_index(s.at(0), action)].to};
}

std::vector<std::pair<FlowState, std::size_t>> DagEnvironment::parents(const FlowState& s) const {
  std::vector<std::pair<FlowState, std::size_t>> out;
  for (const Transition& t : transitions_) {
    if (t.to == s.at(0)) out.push_back({{t.from}, t.action});
  }
  return out;
}

bool DagEnvironment::is_terminal(const FlowState& s) const { return rewards_.count(s.at(0)) != 0; }

double DagEnvironment::reward(const FlowState& s) const { return rewards_.at(s.at(0)); }

Tensor DagEnvironment::features(const FlowState& s, const std::vector<std::size_t>& actions) const {
  Shape shape{actions.size(), transitions_.size()};
  std::vector<double> x(actions.size() * transitions_.size(), 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) x[i * transitions_.size() + transition_index(s.at(0), actions[i])] = 1.0;
  return Tensor(shape, std::move(x));
}

GraphFlowEnvironment::GraphFlowEnvironment(const GnnModel& model, const Graph& graph, std::size_t max_edges,
                                           double reward_eps)
    : model_(&model), graph_(&graph), max_edges_(max_edges), eps_(reward_eps) {
  if (max_edges < 1) throw DomainError("GraphFlowEnvironment: max_edges must be >= 1");
  if (!(reward_eps >= 0.0)) throw DomainError("GraphFlowEnvironment: reward eps must be >= 0");
  target_ = model.predict(graph).label;
  emb_ = detail::graph_embeddings(model, graph, &dim_);
}

std::vector<bool> GraphFlowEnvironment::nodes_of(const FlowState& s) const {
  std::vector<bool> in(graph_->num_nodes, false);
  for (std::size_t e : s) in[graph_->edges[e].u] = in[graph_->edges[e].v] = true;
  return in;
}

bool GraphFlowEnvironment::connected(const FlowState& s) const {
  if (s.size() <= 1) return true;
  std::vector<std::size_t> parent(graph_->num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e : s) parent[find(graph_->edges[e].u)] = find(graph_->edges[e].v);
  const std::size_t root = find(graph_->edges[s.front()].u);
  return std::all_of(s.begin(), s.end(), [&](std::size_t e) { return find(graph_->edges[e].u) == root; });
}

std::vector<std::size_t> GraphFlowEnvironment::actions(const FlowState& s) const {
  std::vector<std::size_t> out;
  if (s.size() >= max_edges_) return out;
  const auto in = nodes_of(s);
  for (std::size_t k = 0; k < graph_->num_edges(); ++k) {
    if (std::binary_search(s.begin(), s.end(), k)) continue;
    const Edge& e = graph_->edges[k];
    if (s.empty() || in[e.u] || in[e.v]) out.push_back(k);
  }
  return out;
}

FlowState GraphFlowEnvironment::apply(const FlowState& s, std::size_t action) const {
  FlowState next = s;
  next.insert(std::upper_bound(next.begin(), next.end(), action), action);
  return next;
}

std::vector<std::pair<FlowState, std::size_t>> GraphFlowEnvironment::parents(const FlowState& s) const {
  std::vector<std::pair<FlowState, std::size_t>> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    FlowState p = s;
    p.erase(p.begin() + static_cast<std::ptrdiff_t>(i));
    if (!p.empty()) {
      const auto in = nodes_of(p);
      const Edge& e = graph_->edges[s[i]];
      if (!(in[e.u] || in[e.v]) || !connected(p)) continue;
    }
    out.emplace_back(std::move(p), s[i]);
  }
  return out;
}

bool GraphFlowEnvironment::is_terminal(const FlowState& s) const { return !s.empty() && actions(s).empty(); }

double GraphFlowEnvironment::reward(const FlowState& s) const {
  auto it = reward_cache_.find(s);
  if (it != reward_cache_.end()) return it->second;
  std::vector<double> mask(graph_->num_edges(), 0.0);
  for (std::size_t e : s) mask[e] = 1.0;
  const double r = model_->predict(*graph_, &mask).probs[target_] + eps_;
  reward_cache_.emplace(s, r);
  return r;
}

Tensor GraphFlowEnvironment::features(const FlowState& s, const std::vector<std::size_t>& actions) const {
  return detail::action_features(*graph_, emb_, dim_, nodes_of(s), actions);
}

ParameterSet init_flow_params(const FlowEnvironment& env, std::size_t hidden_dim, std::size_t num_layers, Rng& rng) {
  if (num_layers < 1) throw DomainError("flow network needs at least one layer");
  std::vector<std::size_t> dims{env.feature_dim()};
  for (std::size_t l = 1; l < num_layers; ++l) dims.push_back(hidden_dim);
  dims.push_back(1);
  ParameterSet p;
  detail::add_mlp(p, "flow", dims, rng);
  return p;
}

FlowFunction flow_network(const ParameterSet& params, std::size_t num_layers, const FlowEnvironment& env) {
  return [&params, num_layers, &env](const FlowState& s, const std::vector<std::size_t>& actions) {
    const Tensor out = detail::mlp(params, "flow", num_layers, env.features(s, actions));
    return ops::reshape(ops::exp(ops::clamp(out, -30.0, 30.0)), {actions.size()});
  };
}

Tensor flow_matching_loss(const FlowEnvironment& env, const FlowFunction& flow,
                          const std::vector<FlowTrajectory>& trajectories) {
  Tensor loss = Tensor::scalar(0.0);
  for (const FlowTrajectory& traj : trajectories) {
    for (std::size_t t = 1; t < traj.size(); ++t) {
      const FlowState& s = traj[t];
      Tensor inflow = Tensor::scalar(0.0);
      for (const auto& [parent, action] : env.parents(s)) {
        inflow = ops::add(inflow, ops::sum(flow(parent, {action})));
      }
      Tensor outflow;
      if (env.is_terminal(s)) {
        outflow = Tensor::scalar(env.reward(s));
      } else {
        outflow = ops::sum(flow(s, env.actions(s)));
      }
      const Tensor r = ops::sub(inflow, outflow);
      loss = ops::add(loss, ops::mul(r, r));
    }
  }
  return loss;
}

namespace {

FlowTrajectory rollout(const FlowEnvironment& env, const FlowFunction& flow, Rng* rng, double explore) {
  FlowTrajectory traj{env.initial()};
  while (true) {
    const FlowState& s = traj.back();
    if (env.is_terminal(s)) return traj;
    const auto acts = env.actions(s);
    if (acts.empty()) return traj.size() == 1 ? FlowTrajectory{} : traj;
    const auto f = flow(s, acts).values();
    std::size_t pick = 0;
    if (!rng) {
      pick = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
    } else if (explore > 0.0 && rng->uniform() < explore) {
      pick = rng->below(acts.size());
    } else {
      pick = rng->categorical(f);
    }
    traj.push_back(env.apply(s, acts[pick]));
  }
}

}  // namespace

FlowTrajectory sample_flow_trajectory(const FlowEnvironment& env, const FlowFunction& flow, Rng& rng,
                                      double explore) {
  return rollout(env, flow, &rng, explore);
}

FlowTrajectory greedy_flow_trajectory(const FlowEnvironment& env, const FlowFunction& flow) {
  return rollout(env, flow, nullptr, 0.0);
}

std::vector<double> train_flow_on(const FlowEnvironment& env, ParameterSet& params, std::size_t num_layers,
                                  const FlowTrainOptions& options, Rng& rng) {
  Adam adam({.lr = options.lr});
  std::vector<double> losses;
  for (std::size_t step = 0; step < options.steps; ++step) {
    std::vector<FlowTrajectory> batch;
    const FlowFunction current = flow_network(params, num_layers, env);
    for (std::size_t i = 0; i < options.trajectories_per_step; ++i) {
      auto traj = sample_flow_trajectory(env, current, rng, options.explore);
      if (!traj.empty()) batch.push_back(std::move(traj));
    }
    if (batch.empty()) break;
    Tape tape;
    const ParameterSet tracked = params.track(tape);
    const Tensor loss = flow_matching_loss(env, flow_network(tracked, num_layers, env), batch);
    adam.step(params, ParameterSet::gradients(tracked, tape.backward(loss)));
    losses.push_back(loss.item() / static_cast<double>(batch.size()));
  }
  return losses;
}

FlowExplainer::FlowExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params)
    : config_(std::move(config)), model_(std::move(model)), params_(std::move(params)) {
  if (!model_) throw ContractError("FlowExplainer: no base model");
}

ExplanationMask FlowExplainer::explain(const Graph& graph, std::size_t k) const {
  const std::size_t steps = k > 0 ? k : config_.max_steps;
  if (graph.num_edges() == 0) return make_mask({}, k, model_->predict(graph).label);
  const GraphFlowEnvironment env(*model_, graph, steps, config_.flow_reward_eps);
  const FlowFunction flow = flow_network(params_, kFlowLayers, env);
  FlowTrajectory best = greedy_flow_trajectory(env, flow);
  double best_reward = env.reward(best.back());
  Rng rng(config_.seed);
  for (std::size_t r = 0; r < config_.flow_rollouts; ++r) {
    FlowTrajectory t = sample_flow_trajectory(env, flow, rng);
    const double value = env.reward(t.back());
    if (value > best_reward) {
      best_reward = value;
      best = std::move(t);
    }
  }
  // Recover the action order from consecutive states.
  std::vector<std::size_t> order;
  for (std::size_t t = 1; t < best.size(); ++t) {
    std::vector<std::size_t> added;
    std::set_difference(best[t].begin(), best[t].end(), best[t - 1].begin(), best[t - 1].end(),
                        std::back_inserter(added));
    order.push_back(added.at(0));
  }
  return make_mask(trajectory_weights(graph.num_edges(), order), k, env.target());
}

TrainedExplainer train_flow_dag(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                const ExplainerConfig& config) {
  validate_explainer_config(config);
  const auto indices = detail::train_indices(dataset);
  Rng rng(config.seed);
  std::vector<std::unique_ptr<GraphFlowEnvironment>> envs;
  for (std::size_t i : indices) {
    if (dataset.graphs[i].num_edges() == 0) continue;
    envs.push_back(
        std::make_unique<GraphFlowEnvironment>(*model, dataset.graphs[i], config.max_steps, config.flow_reward_eps));
  }
  if (envs.empty()) throw DomainError("flow training: no train graph has edges");
  ParameterSet params = init_flow_params(*envs.front(), config.hidden_dim, kFlowLayers, rng);
  Adam adam({.lr = config.lr});
  std::vector<std::size_t> order(envs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainLogEntry> log;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    TrainLogEntry entry{epoch + 1, 0.0, 0.0, 0.0, 0.0};
    std::size_t batches = 0, trajectories = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      Tape tape;
      const ParameterSet tracked = params.track(tape);
      Tensor loss = Tensor::scalar(0.0);
      std::size_t count = 0;
      for (std::size_t j = start; j < std::min(order.size(), start + config.batch_size); ++j) {
        const GraphFlowEnvironment& env = *envs[order[j]];
        const FlowFunction current = flow_network(params, kFlowLayers, env);
        std::vector<FlowTrajectory> batch;
        for (std::size_t e = 0; e < config.episodes_per_graph; ++e) {
          auto t = sample_flow_trajectory(env, current, rng, 0.1);
          if (t.empty()) continue;
          entry.reward += env.reward(t.back());
          batch.push_back(std::move(t));
        }
        count += batch.size();
        loss = ops::add(loss, flow_matching_loss(env, flow_network(tracked, kFlowLayers, env), batch));
      }
      if (count == 0) continue;
      loss = ops::mul_scalar(loss, 1.0 / static_cast<double>(count));
      adam.step(params, ParameterSet::gradients(tracked, tape.backward(loss)));
      entry.attr += loss.item();
      trajectories += count;
      ++batches;
    }
    if (batches > 0) entry.attr /= static_cast<double>(batches);
    if (trajectories > 0) entry.reward /= static_cast<double>(trajectories);
    entry.total = entry.attr;
    log.push_back(entry);
  }
  return {std::make_unique<FlowExplainer>(config, model, std::move(params)), std::move(log)};
}

}  // namespace gnnx
