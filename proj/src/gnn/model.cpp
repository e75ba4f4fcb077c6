#include "gnnx/gnn/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "gnnx/error.hpp"
#include "gnnx/tensor/checkpoint.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx {

std::string to_string(LayerKind kind) { return kind == LayerKind::kGcn ? "gcn" : "gin"; }

LayerKind layer_kind_from_string(const std::string& name) {
  if (name == "gcn") return LayerKind::kGcn;
  if (name == "gin") return LayerKind::kGin;
  throw UsageError("unknown layer kind '" + name + "' (expected gcn or gin)");
}

void validate_config(const GnnConfig& c) {
  if (c.num_layers < 1) throw ValidationError("gnn config: num_layers must be >= 1");
  if (c.hidden_dim < 1) throw ValidationError("gnn config: hidden_dim must be >= 1");
  if (c.num_classes < 1) throw ValidationError("gnn config: num_classes must be >= 1");
  if (c.node_feature_dim < 1) throw ValidationError("gnn config: node_feature_dim must be >= 1");
  if (c.readout != "max") throw ValidationError("gnn config: only max readout is supported");
  if (c.batch_size < 1) throw ValidationError("gnn config: batch_size must be >= 1");
  if (!(c.lr > 0.0)) throw ValidationError("gnn config: lr must be positive");
}

GraphBatch make_batch(const std::vector<const Graph*>& graphs) {
  GraphBatch b;
  b.num_graphs = graphs.size();
  if (graphs.empty()) throw DomainError("make_batch: no graphs");
  const std::size_t dn = graphs.front()->node_feature_dim();
  const std::size_t de = graphs.front()->edge_feature_dim();
  std::vector<double> xn, xe;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const Graph& graph = *graphs[g];
    if (graph.node_feature_dim() != dn || graph.edge_feature_dim() != de) {
      throw DimensionError("make_batch: graphs disagree on feature dimensions");
    }
    b.node_offset.push_back(b.num_nodes);
    b.edge_offset.push_back(b.num_edges);
    for (const Edge& e : graph.edges) {
      b.src.push_back(b.num_nodes + e.u);
      b.dst.push_back(b.num_nodes + e.v);
      b.edge_of.push_back(b.num_edges);
      b.src.push_back(b.num_nodes + e.v);
      b.dst.push_back(b.num_nodes + e.u);
      b.edge_of.push_back(b.num_edges);
      ++b.num_edges;
    }
    b.node_graph.insert(b.node_graph.end(), graph.num_nodes, g);
    b.num_nodes += graph.num_nodes;
    xn.insert(xn.end(), graph.node_features.values().begin(), graph.node_features.values().end());
    xe.insert(xe.end(), graph.edge_features.values().begin(), graph.edge_features.values().end());
  }
  b.node_offset.push_back(b.num_nodes);
  b.edge_offset.push_back(b.num_edges);
  b.node_features = Tensor({b.num_nodes, dn}, std::move(xn));
  b.edge_features = Tensor({b.num_edges, de}, std::move(xe));
  return b;
}

GraphBatch make_batch(const Graph& graph) { return make_batch(std::vector<const Graph*>{&graph}); }

namespace {

Tensor linear(const Tensor& x, const ParameterSet& p, const std::string& name) {
  return ops::add_bias(ops::matmul(x, p.get(name + ".weight")), p.get(name + ".bias"));
}

Tensor column(const Tensor& v) { return ops::reshape(v, {v.numel(), 1}); }

Tensor flat(const Tensor& v) { return ops::reshape(v, {v.numel()}); }

void check_weights(const Tensor& w, std::size_t num_edges) {
  if (w.numel() != num_edges) {
    throw DimensionError("gnn_forward: " + std::to_string(w.numel()) + " edge weights for " +
                         std::to_string(num_edges) + " edges");
  }
  for (double v : w.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("gnn_forward: edge weight " + std::to_string(v) + " outside [0,1]");
  }
}

constexpr double kBnEps = 1e-5;

Tensor batch_norm(const ParameterSet& p, const std::string& prefix, const Tensor& x, BatchStats* stats) {
  Tensor centred, inv_std;
  if (stats) {
    const Tensor mu = ops::mean(x, 0);
    centred = ops::add_bias(x, ops::neg(mu));
    const Tensor var = ops::mean(ops::mul(centred, centred), 0);
    inv_std = ops::div(Tensor::ones(var.shape()), ops::sqrt(ops::add_scalar(var, kBnEps)));
    stats->mean_var[prefix] = {mu.values(), var.values()};
  } else {
    centred = ops::add_bias(x, ops::neg(p.get(prefix + ".running_mean")));
    const Tensor& var = p.get(prefix + ".running_var");
    std::vector<double> inv(var.numel());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / std::sqrt(var[i] + kBnEps);
    inv_std = Tensor::vector(std::move(inv));
  }
  return ops::add_bias(ops::scale_cols(ops::scale_cols(centred, inv_std), p.get(prefix + ".gamma")),
                       p.get(prefix + ".beta"));
}

Tensor gin_layer(const GnnConfig& c, const ParameterSet& p, std::size_t layer, const Tensor& h, const GraphBatch& b,
                 const std::optional<Tensor>& w_dir, BatchStats* stats) {
  const std::string prefix = "gin" + std::to_string(layer);
  Tensor z = ops::mul(h, ops::add_scalar(p.get(prefix + ".eps"), 1.0));
  if (b.num_edges > 0) {
    const Tensor edge_term = linear(b.edge_features, p, prefix + ".edge");
    Tensor msg = ops::add(ops::gather_rows(h, b.src), ops::gather_rows(edge_term, b.edge_of));
    if (w_dir) msg = ops::scale_rows(msg, *w_dir);
    z = ops::add(z, ops::scatter_add_rows(msg, b.dst, b.num_nodes));
  }
  Tensor pre = linear(z, p, prefix + ".mlp0");
  if (c.batch_norm) pre = batch_norm(p, prefix + ".bn", pre, stats);
  const Tensor hidden = ops::relu(pre);
  return ops::relu(linear(hidden, p, prefix + ".mlp1"));
}

Tensor gcn_layer(const ParameterSet& p, std::size_t layer, const Tensor& h, const GraphBatch& b,
                 const std::optional<Tensor>& w_dir) {
  const std::string prefix = "gcn" + std::to_string(layer);
  const Tensor hw = ops::matmul(h, p.get(prefix + ".weight"));
  Tensor weights = w_dir ? *w_dir : Tensor::ones({2 * b.num_edges});
  // deg_i = 1 + sum_j w_ij, self loop included.
  Tensor deg = Tensor::ones({b.num_nodes});
  if (b.num_edges > 0) deg = ops::add(deg, flat(ops::scatter_add_rows(column(weights), b.dst, b.num_nodes)));
  Tensor agg = ops::scale_rows(hw, ops::div(Tensor::ones({b.num_nodes}), deg));
  if (b.num_edges > 0) {
    const Tensor inv_sqrt = column(ops::div(Tensor::ones({b.num_nodes}), ops::sqrt(deg)));
    const Tensor coef = ops::mul(ops::mul(weights, flat(ops::gather_rows(inv_sqrt, b.src))),
                                 flat(ops::gather_rows(inv_sqrt, b.dst)));
    agg = ops::add(agg, ops::scatter_add_rows(ops::scale_rows(ops::gather_rows(hw, b.src), coef), b.dst, b.num_nodes));
  }
  return ops::relu(ops::add_bias(agg, p.get(prefix + ".bias")));
}

}  // namespace

GnnOutput gnn_forward(const GnnConfig& config, const ParameterSet& params, const GraphBatch& batch,
                      const Tensor* edge_weights, BatchStats* training_stats) {
  std::optional<Tensor> w_dir;
  if (edge_weights) {
    check_weights(*edge_weights, batch.num_edges);
    if (batch.num_edges > 0) w_dir = flat(ops::gather_rows(column(*edge_weights), batch.edge_of));
  }
  GnnOutput out;
  Tensor h = batch.node_features;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    h = config.layer_kind == LayerKind::kGin ? gin_layer(config, params, l, h, batch, w_dir, training_stats)
                                             : gcn_layer(params, l, h, batch, w_dir);
    out.layer_nodes.push_back(h);
  }
  const Tensor pooled = ops::segment_max(h, batch.node_graph, batch.num_graphs);
  out.logits = linear(pooled, params, "head");
  return out;
}

bool is_running_stat(const std::string& name) { return name.find(".running_") != std::string::npos; }

void update_running_stats(ParameterSet& params, const BatchStats& stats, double momentum) {
  for (const auto& [prefix, mv] : stats.mean_var) {
    for (const auto& [suffix, observed] : {std::pair{".running_mean", &mv.first}, std::pair{".running_var", &mv.second}}) {
      std::vector<double> v = params.get(prefix + suffix).values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - momentum) * v[i] + momentum * (*observed)[i];
      params.set(prefix + suffix, Tensor::vector(std::move(v)));
    }
  }
}

Prediction prediction_from_logits(std::span<const double> logits) {
  Prediction p;
  if (logits.empty()) throw DomainError("prediction: no classes");
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) {
    p.probs.push_back(std::exp(v - top));
    z += p.probs.back();
  }
  for (double& v : p.probs) v /= z;
  p.label = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  return p;
}

ParameterSet init_gnn_params(const GnnConfig& c, std::uint64_t seed) {
  validate_config(c);
  Rng rng(seed);
  ParameterSet p;
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::size_t in = l == 0 ? c.node_feature_dim : c.hidden_dim;
    if (c.layer_kind == LayerKind::kGin) {
      const std::string prefix = "gin" + std::to_string(l);
      p.set(prefix + ".eps", Tensor::scalar(0.0));
      p.set(prefix + ".edge.weight", glorot_uniform(c.edge_feature_dim, in, rng));
      p.set(prefix + ".edge.bias", Tensor::zeros({in}));
      p.set(prefix + ".mlp0.weight", glorot_uniform(in, c.hidden_dim, rng));
      p.set(prefix + ".mlp0.bias", Tensor::zeros({c.hidden_dim}));
      if (c.batch_norm) {
        p.set(prefix + ".bn.gamma", Tensor::ones({c.hidden_dim}));
        p.set(prefix + ".bn.beta", Tensor::zeros({c.hidden_dim}));
        p.set(prefix + ".bn.running_mean", Tensor::zeros({c.hidden_dim}));
        p.set(prefix + ".bn.running_var", Tensor::ones({c.hidden_dim}));
      }
      p.set(prefix + ".mlp1.weight", glorot_uniform(c.hidden_dim, c.hidden_dim, rng));
      p.set(prefix + ".mlp1.bias", Tensor::zeros({c.hidden_dim}));
    } else {
      const std::string prefix = "gcn" + std::to_string(l);
      p.set(prefix + ".weight", glorot_uniform(in, c.hidden_dim, rng));
      p.set(prefix + ".bias", Tensor::zeros({c.hidden_dim}));
    }
  }
  p.set("head.weight", glorot_uniform(c.hidden_dim, c.num_classes, rng));
  p.set("head.bias", Tensor::zeros({c.num_classes}));
  return p;
}

GnnModel::GnnModel(GnnConfig config, ParameterSet params) : config_(std::move(config)), params_(std::move(params)) {
  validate_config(config_);
  const ParameterSet expected = init_gnn_params(config_, 0);
  if (expected.size() != params_.size()) throw ValidationError("gnn model: parameter count does not match config");
  for (const auto& [name, t] : expected) {
    if (!params_.contains(name)) throw ValidationError("gnn model: missing parameter " + name);
    if (params_.get(name).shape() != t.shape()) {
      throw ValidationError("gnn model: parameter " + name + " has shape " + shape_string(params_.get(name).shape()) +
                            ", expected " + shape_string(t.shape()));
    }
  }
}

GnnModel GnnModel::init(const GnnConfig& config, std::uint64_t seed) {
  return GnnModel(config, init_gnn_params(config, seed));
}

GnnOutput GnnModel::forward(const GraphBatch& batch, const Tensor* edge_weights) const {
  return gnn_forward(config_, params_, batch, edge_weights);
}

Tensor GnnModel::logits(const Graph& graph, const std::vector<double>* edge_weights) const {
  const GraphBatch batch = make_batch(graph);
  if (!edge_weights) return ops::reshape(forward(batch).logits, {config_.num_classes});
  const Tensor w = Tensor::vector(*edge_weights);
  return ops::reshape(forward(batch, &w).logits, {config_.num_classes});
}

Prediction GnnModel::predict(const Graph& graph, const std::vector<double>* edge_weights) const {
  return prediction_from_logits(logits(graph, edge_weights).data());
}

std::vector<Prediction> GnnModel::predict_masks(const Graph& graph,
                                                const std::vector<std::vector<double>>& masks) const {
  if (masks.empty()) return {};
  const std::vector<const Graph*> copies(masks.size(), &graph);
  const GraphBatch batch = make_batch(copies);
  std::vector<double> all;
  all.reserve(masks.size() * graph.num_edges());
  for (const auto& m : masks) {
    if (m.size() != graph.num_edges()) throw DimensionError("predict_masks: mask length differs from edge count");
    all.insert(all.end(), m.begin(), m.end());
  }
  const Tensor w = Tensor::vector(std::move(all));
  const Tensor logits = forward(batch, &w).logits;
  std::vector<Prediction> out;
  const std::size_t c = config_.num_classes;
  for (std::size_t i = 0; i < masks.size(); ++i) out.push_back(prediction_from_logits(logits.data().subspan(i * c, c)));
  return out;
}

std::string config_to_json(const GnnConfig& c) {
  nlohmann::ordered_json j;
  j["layer_kind"] = to_string(c.layer_kind);
  j["hidden_dim"] = c.hidden_dim;
  j["num_layers"] = c.num_layers;
  j["readout"] = c.readout;
  j["num_classes"] = c.num_classes;
  j["node_feature_dim"] = c.node_feature_dim;
  j["edge_feature_dim"] = c.edge_feature_dim;
  j["lr"] = c.lr;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["batch_size"] = c.batch_size;
  j["batch_norm"] = c.batch_norm;
  j["allow_degenerate_labels"] = c.allow_degenerate_labels;
  return j.dump(2) + "\n";
}

GnnConfig config_from_json(const std::string& text) {
  GnnConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.layer_kind = layer_kind_from_string(j.value("layer_kind", to_string(c.layer_kind)));
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.readout = j.value("readout", c.readout);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.node_feature_dim = j.value("node_feature_dim", c.node_feature_dim);
    c.edge_feature_dim = j.value("edge_feature_dim", c.edge_feature_dim);
    c.lr = j.value("lr", c.lr);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.batch_norm = j.value("batch_norm", c.batch_norm);
    c.allow_degenerate_labels = j.value("allow_degenerate_labels", c.allow_degenerate_labels);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("gnn config: ") + e.what());
  }
  validate_config(c);
  return c;
}

void save_model(const GnnModel& model, const std::filesystem::path& path) {
  write_file_atomic(path.string() + ".json", config_to_json(model.config()));
  save_parameters(model.params(), path);
}

GnnModel load_model(const std::filesystem::path& path) {
  GnnConfig config = config_from_json(read_file(path.string() + ".json"));
  return GnnModel(config, load_parameters(path));
}

}  // namespace gnnx
