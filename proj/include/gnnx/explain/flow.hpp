#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "gnnx/explain/common.hpp"
#include "gnnx/explain/explainer.hpp"

namespace gnnx {

// A state is a sorted set of ids; the empty set is allowed.
using FlowState = std::vector<std::size_t>;

// Acyclic state space for flow matching. Every non-terminal state has at
// least one action; terminal states carry a positive reward.
class FlowEnvironment {
 public:
  virtual ~FlowEnvironment() = default;
  virtual FlowState initial() const = 0;
  virtual std::vector<std::size_t> actions(const FlowState& s) const = 0;
  virtual FlowState apply(const FlowState& s, std::size_t action) const = 0;
  // (parent, action) pairs leading into s.
  virtual std::vector<std::pair<FlowState, std::size_t>> parents(const FlowState& s) const = 0;
  virtual bool is_terminal(const FlowState& s) const = 0;
  virtual double reward(const FlowState& s) const = 0;
  // Feature rows for (s, a) over the given actions: [n x feature_dim].
  virtual Tensor features(const FlowState& s, const std::vector<std::size_t>& actions) const = 0;
  virtual std::size_t feature_dim() const = 0;
};

// Explicit DAG given by transitions; state ids are wrapped as {id} and the
// initial state is {0}. Features are one-hot per transition, so a one-layer
// flow network is tabular.
class DagEnvironment : public FlowEnvironment {
 public:
  struct Transition {
    std::size_t from, action, to;
  };
  DagEnvironment(std::vector<Transition> transitions, std::map<std::size_t, double> rewards);

  FlowState initial() const override { return {0}; }
  std::vector<std::size_t> actions(const FlowState& s) const override;
  FlowState apply(const FlowState& s, std::size_t action) const override;
  std::vector<std::pair<FlowState, std::size_t>> parents(const FlowState& s) const override;
  bool is_terminal(const FlowState& s) const override;
  double reward(const FlowState& s) const override;
  Tensor features(const FlowState& s, const std::vector<std::size_t>& actions) const override;
  std::size_t feature_dim() const override { return transitions_.size(); }

 private:
  std::size_t transition_index(std::size_t from, std::size_t action) const;
  std::vector<Transition> transitions_;
  std::map<std::size_t, double> rewards_;
};

// Connected edge subsets of one graph, grown from the empty set up to
// `max_edges` edges. Reward of a terminal subset is P_f(G_s)[Y*] + eps.
class GraphFlowEnvironment : public FlowEnvironment {
 public:
  GraphFlowEnvironment(const GnnModel& model, const Graph& graph, std::size_t max_edges, double reward_eps);

  FlowState initial() const override { return {}; }
  std::vector<std::size_t> actions(const FlowState& s) const override;
  FlowState apply(const FlowState& s, std::size_t action) const override;
  std::vector<std::pair<FlowState, std::size_t>> parents(const FlowState& s) const override;
  bool is_terminal(const FlowState& s) const override;
  double reward(const FlowState& s) const override;
  Tensor features(const FlowState& s, const std::vector<std::size_t>& actions) const override;
  std::size_t feature_dim() const override { return 2 * dim_; }

  std::size_t target() const { return target_; }

 private:
  std::vector<bool> nodes_of(const FlowState& s) const;
  bool connected(const FlowState& s) const;

  const GnnModel* model_;
  const Graph* graph_;
  std::size_t max_edges_;
  double eps_;
  std::size_t target_;
  std::vector<double> emb_;
  std::size_t dim_ = 0;
  mutable std::map<FlowState, double> reward_cache_;
};

// Flows F(s, a) for the listed actions, shape [n].
using FlowFunction = std::function<Tensor(const FlowState&, const std::vector<std::size_t>&)>;

// F = exp(MLP(features)) with the pre-activation clamped to [-30, 30].
FlowFunction flow_network(const ParameterSet& params, std::size_t num_layers, const FlowEnvironment& env);
ParameterSet init_flow_params(const FlowEnvironment& env, std::size_t hidden_dim, std::size_t num_layers, Rng& rng);

// A trajectory lists the visited states s_0 (initial) ... s_T (terminal).
using FlowTrajectory = std::vector<FlowState>;

// Sum over t >= 1 of (inflow(s_t) - outflow(s_t))^2, where the outflow of a
// terminal state is its reward.
Tensor flow_matching_loss(const FlowEnvironment& env, const FlowFunction& flow,
                          const std::vector<FlowTrajectory>& trajectories);

// Samples a trajectory with P(a|s) proportional to F(s, a); with probability
// `explore` per step the action is uniform instead. Empty when the initial
// state has no actions.
FlowTrajectory sample_flow_trajectory(const FlowEnvironment& env, const FlowFunction& flow, Rng& rng,
                                      double explore = 0.0);
FlowTrajectory greedy_flow_trajectory(const FlowEnvironment& env, const FlowFunction& flow);

struct FlowTrainOptions {
  std::size_t steps = 2000;
  std::size_t trajectories_per_step = 16;
  double lr = 0.01;
  double explore = 0.1;
};
// Trains params in place on a single environment.
std::vector<double> train_flow_on(const FlowEnvironment& env, ParameterSet& params, std::size_t num_layers,
                                  const FlowTrainOptions& options, Rng& rng);

class FlowExplainer : public Explainer {
 public:
  FlowExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);
  ExplainerFamily family() const override { return ExplainerFamily::kFlowDag; }
  // Best terminal subset among the greedy rollout and flow_rollouts sampled
  // ones (fixed seed); weights decay along the chosen trajectory.
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return params_; }
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  std::shared_ptr<const GnnModel> model_;
  ParameterSet params_;
};

inline constexpr std::size_t kFlowLayers = 2;

TrainedExplainer train_flow_dag(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                const ExplainerConfig& config);

}  // namespace gnnx
