#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnnx/graph/graph.hpp"
#include "gnnx/tensor/params.hpp"

namespace gnnx {

enum class LayerKind { kGcn, kGin };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct GnnConfig {
  LayerKind layer_kind = LayerKind::kGin;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 3;
  std::string readout = "max";
  std::size_t num_classes = 2;
  std::size_t node_feature_dim = 1;
  std::size_t edge_feature_dim = 1;
  double lr = 0.001;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::size_t batch_size = 64;
  // Batch normalisation between the two linear maps of each GIN MLP.
  bool batch_norm = true;
  // Permits training on a single-class train split (otherwise a DomainError).
  bool allow_degenerate_labels = false;
};

// Throws ValidationError for an inconsistent configuration.
void validate_config(const GnnConfig& config);

// Disjoint union of graphs. Each undirected edge k yields the two directed
// messages 2k (u -> v) and 2k+1 (v -> u), both scaled by the same weight.
struct GraphBatch {
  std::size_t num_graphs = 0;
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  Tensor node_features;  // [num_nodes x d_n]
  Tensor edge_features;  // [num_edges x d_e]
  std::vector<std::size_t> src, dst, edge_of;  // per directed message
  std::vector<std::size_t> node_graph;         // graph id of each node
  std::vector<std::size_t> node_offset, edge_offset;  // per graph, plus a final total
};

GraphBatch make_batch(const std::vector<const Graph*>& graphs);
GraphBatch make_batch(const Graph& graph);

struct GnnOutput {
  Tensor logits;                    // [num_graphs x num_classes]
  std::vector<Tensor> layer_nodes;  // per layer, [num_nodes x hidden]
};

// Per-channel statistics observed by the batch-norm layers in training mode,
// keyed by parameter prefix (e.g. "gin0.bn").
struct BatchStats {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> mean_var;
};

// Moves running statistics toward the observed batch statistics.
void update_running_stats(ParameterSet& params, const BatchStats& stats, double momentum = 0.1);

// Message passing forward pass. `edge_weights` ([num_edges], values in
// [0,1]) scales both directions of every edge; absent means all ones. The
// result is recorded on the tape of whichever of params / edge_weights is
// tracked. Batch norm uses running statistics unless `training_stats` is
// given, in which case batch statistics are used and reported there.
GnnOutput gnn_forward(const GnnConfig& config, const ParameterSet& params, const GraphBatch& batch,
                      const Tensor* edge_weights = nullptr, BatchStats* training_stats = nullptr);

// True for buffers that are not trained by gradient descent.
bool is_running_stat(const std::string& name);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probs;
};

// Softmax of a logit row; label is the argmax with lowest-index tie-break.
Prediction prediction_from_logits(std::span<const double> logits);

class GnnModel {
 public:
  GnnModel() = default;
  GnnModel(GnnConfig config, ParameterSet params);

  static GnnModel init(const GnnConfig& config, std::uint64_t seed);

  const GnnConfig& config() const { return config_; }
  const ParameterSet& params() const { return params_; }

  Tensor logits(const Graph& graph, const std::vector<double>* edge_weights = nullptr) const;
  GnnOutput forward(const GraphBatch& batch, const Tensor* edge_weights = nullptr) const;
  Prediction predict(const Graph& graph, const std::vector<double>* edge_weights = nullptr) const;
  // One prediction per weight vector, all over the same graph, in one pass.
  std::vector<Prediction> predict_masks(const Graph& graph, const std::vector<std::vector<double>>& masks) const;

 private:
  GnnConfig config_;
  ParameterSet params_;
};

ParameterSet init_gnn_params(const GnnConfig& config, std::uint64_t seed);

// Parameters in the tensor container at `path`, configuration as JSON at
// `path` + ".json".
void save_model(const GnnModel& model, const std::filesystem::path& path);
GnnModel load_model(const std::filesystem::path& path);

std::string config_to_json(const GnnConfig& config);
GnnConfig config_from_json(const std::string& text);

}  // namespace gnnx
