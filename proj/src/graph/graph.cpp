#include "gnnx/graph/graph.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "gnnx/error.hpp"

namespace gnnx {

std::optional<std::size_t> Graph::find_edge(Edge e) const {
  e = Edge::canonical(e.u, e.v);
  auto it = std::lower_bound(edges.begin(), edges.end(), e);
  if (it == edges.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - edges.begin());
}

Graph make_graph(std::size_t num_nodes, const std::vector<Edge>& pairs, std::size_t node_feature_dim,
                 std::size_t edge_feature_dim, std::optional<std::size_t> label) {
  Graph g;
  g.num_nodes = num_nodes;
  g.edges.reserve(pairs.size());
  for (const Edge& e : pairs) g.edges.push_back(Edge::canonical(e.u, e.v));
  std::sort(g.edges.begin(), g.edges.end());
  g.node_features = Tensor::ones({num_nodes, node_feature_dim});
  g.edge_features = Tensor::ones({g.edges.size(), edge_feature_dim});
  g.label = label;
  validate_graph(g);
  return g;
}

void validate_graph(const Graph& g) {
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (e.u >= g.num_nodes || e.v >= g.num_nodes) {
      throw ValidationError("edge " + std::to_string(i) + " (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                            ") has an endpoint >= num_nodes " + std::to_string(g.num_nodes));
    }
    if (e.u == e.v) throw ValidationError("edge " + std::to_string(i) + " is a self-loop");
    if (e.u > e.v) throw ValidationError("edge " + std::to_string(i) + " is not in canonical (min,max) order");
    if (i > 0 && !(g.edges[i - 1] < e)) {
      throw ValidationError("edge " + std::to_string(i) + " is duplicated or out of lexicographic order");
    }
  }
  if (g.node_features.rank() != 2 || g.node_features.rows() != g.num_nodes) {
    throw ValidationError("node feature rows " + shape_string(g.node_features.shape()) + " do not match " +
                          std::to_string(g.num_nodes) + " nodes");
  }
  if (g.edge_features.rank() != 2 || g.edge_features.rows() != g.edges.size()) {
    throw ValidationError("edge feature rows " + shape_string(g.edge_features.shape()) + " do not match " +
                          std::to_string(g.edges.size()) + " edges");
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnseen: return "unseen";
    case Split::kUnassigned: break;
  }
  return "unassigned";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  if (name == "unseen") return Split::kUnseen;
  if (name == "unassigned") return Split::kUnassigned;
  throw ParseError("unknown split '" + name + "'");
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

void validate_dataset(const Dataset& ds) {
  if (ds.annotations.size() != ds.graphs.size()) {
    throw ValidationError("dataset: annotation list length differs from graph count");
  }
  if (ds.split.size() != ds.graphs.size()) throw ValidationError("dataset: split list length differs from graph count");
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& g = ds.graphs[i];
    try {
      validate_graph(g);
    } catch (const ValidationError& e) {
      throw ValidationError("graph " + std::to_string(i) + ": " + e.what());
    }
    if (g.label && *g.label >= ds.num_classes) {
      throw ValidationError("graph " + std::to_string(i) + ": label " + std::to_string(*g.label) + " outside [0, " +
                            std::to_string(ds.num_classes) + ")");
    }
    if (ds.annotations[i]) {
      for (const Edge& e : ds.annotations[i]->ground_truth_edges) {
        if (!g.find_edge(e)) {
          throw ValidationError("graph " + std::to_string(i) + ": ground-truth edge (" + std::to_string(e.u) + "," +
                                std::to_string(e.v) + ") is not in the edge list");
        }
      }
    }
  }
}

DatasetStats dataset_stats(const Dataset& ds) {
  DatasetStats s;
  s.num_graphs = ds.size();
  s.num_classes = ds.num_classes;
  if (ds.graphs.empty()) return s;
  s.node_feature_dim = ds.graphs.front().node_feature_dim();
  s.edge_feature_dim = ds.graphs.front().edge_feature_dim();
  double nodes = 0.0, edges = 0.0;
  for (const Graph& g : ds.graphs) {
    nodes += static_cast<double>(g.num_nodes);
    edges += 2.0 * static_cast<double>(g.num_edges());
  }
  s.avg_nodes = nodes / static_cast<double>(ds.size());
  s.avg_edges = edges / static_cast<double>(ds.size());
  s.avg_degree = nodes > 0.0 ? edges / nodes : 0.0;
  return s;
}

Graph edge_subgraph(const Graph& graph, const std::vector<std::size_t>& edge_indices) {
  std::vector<std::size_t> keep = edge_indices;
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  Graph out;
  out.num_nodes = graph.num_nodes;
  out.node_features = graph.node_features;
  out.label = graph.label;
  const std::size_t de = graph.edge_feature_dim();
  std::vector<double> features;
  features.reserve(keep.size() * de);
  for (std::size_t i : keep) {
    if (i >= graph.num_edges()) throw DimensionError("edge_subgraph: edge index out of range");
    out.edges.push_back(graph.edges[i]);
    for (std::size_t c = 0; c < de; ++c) features.push_back(graph.edge_features.at(i, c));
  }
  out.edge_features = Tensor({keep.size(), de}, std::move(features));
  return out;
}

std::size_t count_edge_components(const std::vector<Edge>& edges) {
  std::map<std::size_t, std::size_t> parent;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    parent.try_emplace(e.u, e.u);
    parent.try_emplace(e.v, e.v);
  }
  std::size_t components = parent.size();
  for (const Edge& e : edges) {
    const std::size_t a = find(e.u), b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components;
}

}  // namespace gnnx
