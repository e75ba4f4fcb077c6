#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gnnx/graph/graph.hpp"

namespace gnnx {

// Canonical string of the graph induced by an edge list (isolated nodes are
// ignored). Two edge sets get equal strings iff their induced graphs are
// isomorphic. Exhaustive within colour-refinement classes, so intended for
// small explanation subgraphs; throws DomainError past ~10^7 permutations.
std::string canonical_form(const std::vector<Edge>& edges);

bool isomorphic(const std::vector<Edge>& a, const std::vector<Edge>& b);

// The edge-induced subgraph relabelled to nodes 0..k-1 in increasing order
// of original id; `original_ids` receives the mapping.
std::vector<Edge> compact_edges(const std::vector<Edge>& edges, std::vector<std::size_t>* original_ids = nullptr);

}  // namespace gnnx
