#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gnnx/constraints/constraints.hpp"
#include "gnnx/gnn/model.hpp"
#include "gnnx/graph/graph.hpp"

namespace gnnx {

enum class ExplainerFamily { kMaskGen, kVgae, kRlMdp, kFlowDag, kCounterfactual, kModelLevel, kSaliency, kRandom };

std::string to_string(ExplainerFamily family);
ExplainerFamily family_from_string(const std::string& name);

struct ExplainerConfig {
  ExplainerFamily family = ExplainerFamily::kMaskGen;
  InfoConstraint constraint = InfoConstraint::variational(0.3, 0.1);
  double tau_start = 1.0;
  double tau_end = 0.1;
  std::size_t epochs = 30;
  double lr = 0.003;
  std::size_t hidden_dim = 64;
  std::size_t batch_size = 32;
  std::size_t latent_dim = 16;
  double latent_kl_weight = 0.1;  // VGAE latent KL per node, separate from the constraint lambda
  std::size_t max_steps = 6;      // RL trajectory length
  std::size_t episodes_per_graph = 4;
  double flow_reward_eps = 0.01;
  std::size_t flow_rollouts = 16;  // sampled rollouts per graph at inference
  std::size_t explain_k = 6;       // default hard-mask size
  bool sample_at_inference = false;
  // Forward pass sees the sample rounded to {0,1}; gradients use the relaxed
  // sample.
  bool hard_samples = false;
  std::size_t target_class = 1;  // class explained by the model-level family
  std::uint64_t seed = 0;
};

// Defaults for one family. Counterfactual deletions use a sparser prior
// (0.05) than factual masks (0.3).
ExplainerConfig default_explainer_config(ExplainerFamily family);

void validate_explainer_config(const ExplainerConfig& config);
std::string explainer_config_to_json(const ExplainerConfig& config);
ExplainerConfig explainer_config_from_json(const std::string& text);

struct ExplanationMask {
  std::vector<double> edge_weights;  // canonical edge order, values in [0,1]
  std::optional<std::vector<double>> hard_edges;
  std::size_t target_label = 0;

  // Indices of edges selected by the hard mask.
  std::vector<std::size_t> hard_indices() const;
};

// Builds a mask from soft weights, attaching hard_size_select(weights, k).
ExplanationMask make_mask(std::vector<double> weights, std::size_t k, std::size_t target);

// One epoch of explainer training; total = attr + info.
struct TrainLogEntry {
  std::size_t epoch = 0;
  double total = 0.0;
  double attr = 0.0;
  double info = 0.0;
  double reward = 0.0;  // mean episode return (sequential families only)
};

class Explainer {
 public:
  virtual ~Explainer() = default;
  virtual ExplainerFamily family() const = 0;
  // Deterministic; never modifies the explainer or the base model.
  virtual ExplanationMask explain(const Graph& graph, std::size_t k) const = 0;
  // Trained parameters (empty for parameter-free baselines).
  virtual ParameterSet parameters() const { return {}; }
  virtual const ExplainerConfig& config() const = 0;
};

// Restores a trained explainer of any family from its parameters.
std::unique_ptr<Explainer> restore_explainer(const ExplainerConfig& config, std::shared_ptr<const GnnModel> model,
                                             const ParameterSet& params);

// Trains the configured family on the train split.
struct TrainedExplainer {
  std::unique_ptr<Explainer> explainer;
  std::vector<TrainLogEntry> log;
};
TrainedExplainer train_explainer(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                 const ExplainerConfig& config);

// Serialized explanation record.
std::string explanation_to_json(std::size_t graph_index, const Graph& graph, const ExplanationMask& mask,
                                const std::string& family, double wall_time_ms);

struct ExplanationRecord {
  std::size_t graph_index = 0;
  std::size_t target_label = 0;
  std::vector<double> edge_weights;
  std::vector<Edge> hard_edges;
  std::string family;
  double wall_time_ms = 0.0;
};
ExplanationRecord explanation_from_json(const std::string& text);

}  // namespace gnnx
