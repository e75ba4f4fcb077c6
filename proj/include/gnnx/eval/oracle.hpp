#pragma once

#include <cstddef>
#include <vector>

#include "gnnx/gnn/model.hpp"

namespace gnnx {

inline constexpr std::size_t kOracleMaxEdges = 12;

struct OracleResult {
  std::vector<std::size_t> edges;  // sorted edge indices
  double probability = 0.0;        // P_f(G_e)[target]
  std::size_t candidates = 0;      // connected subsets evaluated
};

// Exhaustive search over non-empty connected edge subsets of at most k edges
// for the one maximising P_f[target]; ties go to the lexicographically
// smallest index list. Graphs with more than kOracleMaxEdges edges, or none,
// are refused with a DomainError.
OracleResult brute_force_best_subgraph(const GnnModel& model, const Graph& graph, std::size_t k, std::size_t target);

// P_f[target] of the graph restricted to the given edges (all nodes kept).
double achieved_probability(const GnnModel& model, const Graph& graph, const std::vector<std::size_t>& edges,
                            std::size_t target);

}  // namespace gnnx
