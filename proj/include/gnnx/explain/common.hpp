#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gnnx/constraints/constraints.hpp"
#include "gnnx/gnn/model.hpp"
#include "gnnx/random.hpp"

// Building blocks shared by the trainable explainers.
namespace gnnx::detail {

// Dense layers "<prefix>.l<i>.weight/bias" for dims[0] -> ... -> dims.back().
void add_mlp(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& dims, Rng& rng);
// ReLU between layers, linear output.
Tensor mlp(const ParameterSet& params, const std::string& prefix, std::size_t num_layers, const Tensor& x);

// Concatenation of every layer's node embeddings from the frozen base model:
// [num_nodes x num_layers * hidden].
Tensor frozen_node_embeddings(const GnnModel& model, const GraphBatch& batch);

// Per undirected edge: [h_u | h_v] in canonical (u < v) order.
Tensor edge_pair_features(const Tensor& node_emb, const GraphBatch& batch);

struct PreparedBatch {
  std::vector<std::size_t> graph_index;  // dataset indices
  GraphBatch batch;
  Tensor embeddings;
  std::vector<std::size_t> targets;  // Y* per graph
};

// Splits `indices` into batches with frozen embeddings and the model's own
// predictions as targets.
std::vector<PreparedBatch> prepare_batches(const GnnModel& model, const Dataset& dataset,
                                           const std::vector<std::size_t>& indices, std::size_t batch_size);

// L_INFO of a batch, averaged over its graphs. Additive constraints sum over
// all edges; the L2 size norm is taken per graph.
Tensor batch_info_loss(const InfoConstraint& c, const Tensor& probs, const Tensor& mask, const GraphBatch& batch);

// Straight-through top-K per graph of the batch for size-budget constraints;
// returns `mask` unchanged otherwise.
Tensor apply_budget(const InfoConstraint& c, const Tensor& mask, const GraphBatch& batch);

// Dataset indices of the train split; DomainError when empty.
std::vector<std::size_t> train_indices(const Dataset& dataset);

// Runner-up class of a probability vector (the most probable class other
// than the predicted one).
std::size_t runner_up(const std::vector<double>& probs);


// Growing connected edge subset of a fixed graph, as used by the sequential
// explainers. Actions add an unchosen edge incident to the subset's nodes
// (any edge while the subset is empty and no start node is set).
class EdgeGrowth {
 public:
  explicit EdgeGrowth(const Graph& graph);

  void reset();
  void reset_at(std::size_t start_node);
  void add(std::size_t edge);

  std::vector<std::size_t> frontier() const;
  const std::vector<std::size_t>& chosen() const { return chosen_; }
  const std::vector<bool>& node_in() const { return node_in_; }
  // 0/1 weights over all edges for the chosen subset.
  std::vector<double> mask() const;

 private:
  const Graph* graph_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<bool> node_in_, edge_in_;
  std::vector<std::size_t> chosen_;
  bool any_node_ = false;
};

// [h_u + h_v | mean of h over the subset's nodes] for each candidate edge;
// `node_emb` is [num_nodes x d] for this graph alone.
Tensor action_features(const Graph& graph, const std::vector<double>& node_emb, std::size_t dim,
                       const std::vector<bool>& node_in, const std::vector<std::size_t>& candidates);

// Frozen embeddings of one graph as plain values ([num_nodes x d] row-major).
std::vector<double> graph_embeddings(const GnnModel& model, const Graph& graph, std::size_t* dim);

}  // namespace gnnx::detail
