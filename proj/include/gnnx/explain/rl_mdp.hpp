#pragma once

#include <memory>
#include <vector>

#include "gnnx/explain/common.hpp"
#include "gnnx/explain/explainer.hpp"

namespace gnnx {

// Policy over frontier edges: features [h_u + h_v | subset mean] -> MLP ->
// score, softmax over the frontier.
class PolicyAgent : public Explainer {
 public:
  PolicyAgent(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);

  static ParameterSet init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng);
  // Log-probabilities over `candidates` (recorded on the params' tape).
  static Tensor log_policy(const ParameterSet& params, const Graph& graph, const std::vector<double>& emb,
                           std::size_t dim, const std::vector<bool>& node_in,
                           const std::vector<std::size_t>& candidates);

  // Action distribution at a state, for inspection.
  std::vector<double> action_probs(const Graph& graph, const std::vector<std::size_t>& chosen,
                                   std::size_t start_node) const;
  // Greedy trajectory of at most max_steps edges from one start node.
  std::vector<std::size_t> greedy_trajectory(const Graph& graph, std::size_t start_node) const;

  ExplainerFamily family() const override { return ExplainerFamily::kRlMdp; }
  // Runs the greedy policy from every non-isolated node and keeps the
  // trajectory whose final subgraph gives the highest P_f[Y*]. Weights decay
  // along the trajectory so top-K returns its prefix.
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return params_; }
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  std::shared_ptr<const GnnModel> model_;
  ParameterSet params_;
};

// 0/1 edge order weights: the i-th edge of a trajectory of length T gets
// 1 - i / (2T); everything else 0.
std::vector<double> trajectory_weights(std::size_t num_edges, const std::vector<std::size_t>& trajectory);

struct Episode {
  std::vector<std::size_t> actions;
  std::vector<double> rewards;  // P_f(G_k)[Y*] - P_f(G_{k-1})[Y*]
};

// Samples one episode with the given policy parameters (no gradient).
Episode sample_episode(const GnnModel& model, const ParameterSet& params, const Graph& graph,
                       const std::vector<double>& emb, std::size_t dim, std::size_t target, std::size_t max_steps,
                       Rng& rng);

// REINFORCE on -sum_k R_k log pi(a_k). The log's `attr` column holds the
// policy loss, `info` is 0 (size is fixed by max_steps) and `reward` holds
// the mean episode return.
TrainedExplainer train_rl_mdp(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                              const ExplainerConfig& config);

}  // namespace gnnx
