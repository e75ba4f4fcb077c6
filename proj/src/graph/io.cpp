#include "gnnx/graph/io.hpp"

#include <algorithm>

#include <json.hpp>

#include "gnnx/error.hpp"
#include "gnnx/tensor/checkpoint.hpp"

namespace gnnx {
namespace {

using Json = nlohmann::ordered_json;

Json edges_json(const std::vector<Edge>& edges) {
  Json out = Json::array();
  for (const Edge& e : edges) out.push_back({e.u, e.v});
  return out;
}

Json matrix_json(const Tensor& t) {
  Json out = Json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Edge> edges_from(const Json& j) {
  std::vector<Edge> edges;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw ParseError("edge must be a [u, v] pair");
    edges.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
  }
  return edges;
}

Tensor matrix_from(const Json& j, std::size_t rows_expected, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) throw ParseError(std::string(what) + " rows are ragged");
    for (const auto& v : row) values.push_back(v.get<double>());
  }
  if (rows == 0 && rows_expected == 0) return Tensor({0, 0}, {});
  return Tensor({rows, cols}, std::move(values));
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace

std::string dataset_to_json(const Dataset& ds) {
  Json root;
  if (!ds.name.empty()) root["name"] = ds.name;
  root["num_classes"] = ds.num_classes;
  Json graphs = Json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Graph& g = ds.graphs[i];
    Json jg;
    jg["num_nodes"] = g.num_nodes;
    jg["edges"] = edges_json(g.edges);
    jg["node_features"] = matrix_json(g.node_features);
    jg["edge_features"] = matrix_json(g.edge_features);
    jg["label"] = g.label ? Json(*g.label) : Json(nullptr);
    if (i < ds.annotations.size() && ds.annotations[i]) {
      jg["ground_truth_edges"] = edges_json(ds.annotations[i]->ground_truth_edges);
      jg["motifs"] = ds.annotations[i]->motif_names;
    }
    if (i < ds.split.size() && ds.split[i] != Split::kUnassigned) jg["split"] = to_string(ds.split[i]);
    graphs.push_back(std::move(jg));
  }
  root["graphs"] = std::move(graphs);
  return root.dump() + "\n";
}

Dataset dataset_from_json(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("dataset JSON: line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  Dataset ds;
  try {
    if (!root.is_object()) throw ParseError("top level must be an object");
    ds.name = root.value("name", std::string());
    ds.num_classes = root.at("num_classes").get<std::size_t>();
    if (!root.at("graphs").is_array()) throw ParseError("\"graphs\" must be an array");
  } catch (const Json::exception& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
  const Json& graphs = root["graphs"];
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Json& jg = graphs[i];
    try {
      Graph g;
      g.num_nodes = jg.at("num_nodes").get<std::size_t>();
      g.edges = edges_from(jg.at("edges"));
      g.node_features = matrix_from(jg.at("node_features"), g.num_nodes, "node_features");
      g.edge_features = matrix_from(jg.at("edge_features"), g.edges.size(), "edge_features");
      if (jg.contains("label") && !jg["label"].is_null()) g.label = jg["label"].get<std::size_t>();
      std::optional<MotifAnnotation> annotation;
      if (jg.contains("ground_truth_edges")) {
        MotifAnnotation a;
        a.ground_truth_edges = edges_from(jg["ground_truth_edges"]);
        for (Edge& e : a.ground_truth_edges) e = Edge::canonical(e.u, e.v);
        std::sort(a.ground_truth_edges.begin(), a.ground_truth_edges.end());
        if (jg.contains("motifs")) a.motif_names = jg["motifs"].get<std::vector<std::string>>();
        annotation = std::move(a);
      }
      ds.split.push_back(jg.contains("split") ? split_from_string(jg["split"].get<std::string>()) : Split::kUnassigned);
      ds.graphs.push_back(std::move(g));
      ds.annotations.push_back(std::move(annotation));
    } catch (const Json::exception& e) {
      throw ParseError("dataset JSON: graph record " + std::to_string(i) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("dataset JSON: graph record " + std::to_string(i) + ": " + e.what());
    } catch (const DimensionError& e) {
      throw ParseError("dataset JSON: graph record " + std::to_string(i) + ": " + e.what());
    }
  }
  validate_dataset(ds);
  return ds;
}

void write_graphs(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_json(dataset));
}

Dataset read_graphs(const std::filesystem::path& path) { return dataset_from_json(read_file(path)); }

}  // namespace gnnx
