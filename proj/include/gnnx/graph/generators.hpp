#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gnnx/graph/graph.hpp"
#include "gnnx/random.hpp"

namespace gnnx {

// A motif pattern over local node ids 0..num_nodes-1.
struct Motif {
  std::string name;
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
};

// 4-cycle 1-2-3-4 with apex 0 joined to 1 and 2 (5 nodes, 6 edges).
Motif house_motif();
// 5-cycle (5 nodes, 5 edges).
Motif cycle_motif();
// 3x3 lattice (9 nodes, 12 edges).
Motif grid_motif();
// Hub 0 joined to every vertex of the 5-cycle 1..5 (6 nodes, 10 edges).
Motif wheel_motif();

// Barabasi-Albert preferential attachment: `attach` seed nodes, then each new
// node links to `attach` distinct existing nodes drawn proportionally to
// degree. Requires num_nodes >= attach + 1 >= 2.
Graph gen_ba(std::size_t num_nodes, std::size_t attach, Rng& rng);
Graph gen_ba(std::size_t num_nodes, std::size_t attach, std::uint64_t seed);

// Appends `motif` to a node count / edge list and links one uniformly chosen
// motif node to one uniformly chosen node among the first `base_nodes` nodes.
// Returns the motif edges (global ids, canonical); the bridge is not included.
std::vector<Edge> attach_motif(std::size_t& num_nodes, std::vector<Edge>& edges, std::size_t base_nodes,
                               const Motif& motif, Rng& rng);

// Half the graphs carry a house (label 1), half a 5-cycle (label 0), each on a
// 20-node BA tree. Constant 1-d node and edge features.
Dataset gen_ba2motifs(std::size_t count, std::uint64_t seed);

// Label 1: exactly two of {house, grid, wheel}; label 0: none, one, or all
// three. Base BA size is chosen so every graph has 40 nodes. 10-d constant
// node features, 1-d edge features.
Dataset gen_ba_multishapes(std::size_t count, std::uint64_t seed);

}  // namespace gnnx
