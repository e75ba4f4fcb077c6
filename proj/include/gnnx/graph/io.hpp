#pragma once

#include <filesystem>
#include <string>

#include "gnnx/graph/graph.hpp"

namespace gnnx {

// JSON dataset file:
// {"num_classes": C, "graphs": [{"num_nodes", "edges": [[u,v],...],
//   "node_features": [[...],...], "edge_features": [[...],...], "label",
//   "ground_truth_edges": [[u,v],...]?, "motifs": [names]?, "split"?}]}
// plus an optional top-level "name". Output is deterministic, so equal
// datasets serialize to identical bytes.
std::string dataset_to_json(const Dataset& dataset);
// Malformed input -> ParseError with line or record context; invariant
// violations -> ValidationError naming the graph index.
Dataset dataset_from_json(const std::string& text);

void write_graphs(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_graphs(const std::filesystem::path& path);

}  // namespace gnnx
