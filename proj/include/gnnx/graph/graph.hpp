#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gnnx/tensor/tensor.hpp"

namespace gnnx {

// Undirected edge stored once, with u < v.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;

  static Edge canonical(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

struct Graph {
  std::size_t num_nodes = 0;
  // Canonical pairs in lexicographic order.
  std::vector<Edge> edges;
  Tensor node_features;  // [num_nodes x d_n]
  Tensor edge_features;  // [num_edges x d_e]
  std::optional<std::size_t> label;

  std::size_t num_edges() const { return edges.size(); }
  std::size_t node_feature_dim() const { return node_features.rank() == 2 ? node_features.cols() : 0; }
  std::size_t edge_feature_dim() const { return edge_features.rank() == 2 ? edge_features.cols() : 0; }
  // Position of an edge in the canonical order, if present.
  std::optional<std::size_t> find_edge(Edge e) const;
};

// Builds a graph from arbitrary (unordered, possibly reversed) pairs with
// constant 1.0 node and edge features. Duplicates and self-loops are errors.
Graph make_graph(std::size_t num_nodes, const std::vector<Edge>& pairs, std::size_t node_feature_dim = 1,
                 std::size_t edge_feature_dim = 1, std::optional<std::size_t> label = std::nullopt);

// Throws ValidationError describing the first violated invariant.
void validate_graph(const Graph& graph);

struct MotifAnnotation {
  std::vector<Edge> ground_truth_edges;  // sorted canonical pairs
  std::vector<std::string> motif_names;
};

enum class Split { kUnassigned, kTrain, kVal, kTest, kUnseen };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<std::optional<MotifAnnotation>> annotations;
  std::size_t num_classes = 0;
  std::vector<Split> split;

  std::size_t size() const { return graphs.size(); }
  std::vector<std::size_t> indices(Split which) const;
};

// Checks every graph, annotation containment, label range and split length;
// errors name the offending graph index.
void validate_dataset(const Dataset& dataset);

// Summary statistics. Edge counts follow the doubled (both directions)
// reporting convention.
struct DatasetStats {
  std::size_t num_graphs = 0;
  std::size_t node_feature_dim = 0;
  std::size_t edge_feature_dim = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;
  double avg_degree = 0.0;
  std::size_t num_classes = 0;
};

DatasetStats dataset_stats(const Dataset& dataset);

// Restricts a graph to a subset of its edges (all nodes kept).
Graph edge_subgraph(const Graph& graph, const std::vector<std::size_t>& edge_indices);

// Connected components over the nodes touched by `edges`; returns the number
// of components (0 for an empty edge list).
std::size_t count_edge_components(const std::vector<Edge>& edges);

}  // namespace gnnx
