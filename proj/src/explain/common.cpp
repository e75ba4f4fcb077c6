#include "gnnx/explain/common.hpp"

#include <algorithm>

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx::detail {

void add_mlp(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& dims, Rng& rng) {
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::string name = prefix + ".l" + std::to_string(i);
    params.set(name + ".weight", glorot_uniform(dims[i], dims[i + 1], rng));
    params.set(name + ".bias", Tensor::zeros({dims[i + 1]}));
  }
}

Tensor mlp(const ParameterSet& params, const std::string& prefix, std::size_t num_layers, const Tensor& x) {
  Tensor h = x;
  for (std::size_t i = 0; i < num_layers; ++i) {
    const std::string name = prefix + ".l" + std::to_string(i);
    h = ops::add_bias(ops::matmul(h, params.get(name + ".weight")), params.get(name + ".bias"));
    if (i + 1 < num_layers) h = ops::relu(h);
  }
  return h;
}

Tensor frozen_node_embeddings(const GnnModel& model, const GraphBatch& batch) {
  const GnnOutput out = model.forward(batch);
  Tensor emb = out.layer_nodes.front();
  for (std::size_t l = 1; l < out.layer_nodes.size(); ++l) emb = ops::concat_cols(emb, out.layer_nodes[l]);
  return emb.detach();
}

Tensor edge_pair_features(const Tensor& node_emb, const GraphBatch& batch) {
  std::vector<std::size_t> u(batch.num_edges), v(batch.num_edges);
  for (std::size_t k = 0; k < batch.num_edges; ++k) {
    u[k] = batch.src[2 * k];
    v[k] = batch.dst[2 * k];
  }
  return ops::concat_cols(ops::gather_rows(node_emb, u), ops::gather_rows(node_emb, v));
}

std::vector<PreparedBatch> prepare_batches(const GnnModel& model, const Dataset& ds,
                                           const std::vector<std::size_t>& indices, std::size_t batch_size) {
  std::vector<PreparedBatch> out;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    PreparedBatch pb;
    std::vector<const Graph*> graphs;
    for (std::size_t i = start; i < std::min(indices.size(), start + batch_size); ++i) {
      pb.graph_index.push_back(indices[i]);
      graphs.push_back(&ds.graphs[indices[i]]);
    }
    pb.batch = make_batch(graphs);
    pb.embeddings = frozen_node_embeddings(model, pb.batch);
    const Tensor logits = model.forward(pb.batch).logits;
    const std::size_t c = model.config().num_classes;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      pb.targets.push_back(prediction_from_logits(logits.data().subspan(g * c, c)).label);
    }
    out.push_back(std::move(pb));
  }
  return out;
}

namespace {

Tensor slice(const Tensor& v, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
  return ops::reshape(ops::gather_rows(ops::reshape(v, {v.numel(), 1}), rows), {rows.size()});
}

}  // namespace

Tensor batch_info_loss(const InfoConstraint& c, const Tensor& probs, const Tensor& mask, const GraphBatch& batch) {
  const double graphs = static_cast<double>(batch.num_graphs);
  if (batch.num_edges == 0) return Tensor::scalar(0.0);
  if (c.kind == ConstraintKind::kSoftSize && c.metric == SizeMetric::kL2) {
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t g = 0; g < batch.num_graphs; ++g) {
      const std::size_t b = batch.edge_offset[g], e = batch.edge_offset[g + 1];
      if (b == e) continue;
      total = ops::add(total, info_loss(c, slice(probs, b, e), slice(mask, b, e)));
    }
    return ops::mul_scalar(total, 1.0 / graphs);
  }
  return ops::mul_scalar(info_loss(c, probs, mask), 1.0 / graphs);
}

Tensor apply_budget(const InfoConstraint& c, const Tensor& mask, const GraphBatch& batch) {
  if (c.kind != ConstraintKind::kHardSize && c.kind != ConstraintKind::kSparsity) return mask;
  std::vector<double> hard(mask.numel(), 0.0);
  const auto values = mask.data();
  for (std::size_t g = 0; g < batch.num_graphs; ++g) {
    const std::size_t b = batch.edge_offset[g], e = batch.edge_offset[g + 1];
    const std::size_t k = *edge_budget(c, e - b);
    for (std::size_t i : top_k_indices(values.subspan(b, e - b), k)) hard[b + i] = 1.0;
  }
  return ops::straight_through(Tensor(mask.shape(), std::move(hard)), mask);
}

std::vector<std::size_t> train_indices(const Dataset& ds) {
  auto idx = ds.indices(Split::kTrain);
  if (idx.empty()) throw DomainError("explainer training: empty train split");
  return idx;
}

std::size_t runner_up(const std::vector<double>& probs) {
  if (probs.size() < 2) throw DomainError("runner-up class needs at least two classes");
  const std::size_t top = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  std::size_t best = top == 0 ? 1 : 0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (c != top && probs[c] > probs[best]) best = c;
  }
  return best;
}


EdgeGrowth::EdgeGrowth(const Graph& graph) : graph_(&graph), incident_(graph.num_nodes) {
  for (std::size_t k = 0; k < graph.num_edges(); ++k) {
    incident_[graph.edges[k].u].push_back(k);
    incident_[graph.edges[k].v].push_back(k);
  }
  reset();
}

void EdgeGrowth::reset() {
  node_in_.assign(graph_->num_nodes, false);
  edge_in_.assign(graph_->num_edges(), false);
  chosen_.clear();
  any_node_ = false;
}

void EdgeGrowth::reset_at(std::size_t start_node) {
  reset();
  node_in_.at(start_node) = true;
  any_node_ = true;
}

void EdgeGrowth::add(std::size_t edge) {
  if (edge_in_.at(edge)) throw ContractError("EdgeGrowth: edge already chosen");
  edge_in_[edge] = true;
  chosen_.push_back(edge);
  node_in_[graph_->edges[edge].u] = true;
  node_in_[graph_->edges[edge].v] = true;
  any_node_ = true;
}

std::vector<std::size_t> EdgeGrowth::frontier() const {
  std::vector<std::size_t> out;
  if (!any_node_) {
    for (std::size_t k = 0; k < graph_->num_edges(); ++k) out.push_back(k);
    return out;
  }
  std::vector<bool> seen(graph_->num_edges(), false);
  for (std::size_t v = 0; v < graph_->num_nodes; ++v) {
    if (!node_in_[v]) continue;
    for (std::size_t k : incident_[v]) {
      if (!edge_in_[k] && !seen[k]) {
        seen[k] = true;
        out.push_back(k);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> EdgeGrowth::mask() const {
  std::vector<double> m(graph_->num_edges(), 0.0);
  for (std::size_t k : chosen_) m[k] = 1.0;
  return m;
}

Tensor action_features(const Graph& graph, const std::vector<double>& emb, std::size_t dim,
                       const std::vector<bool>& node_in, const std::vector<std::size_t>& candidates) {
  std::vector<double> state(dim, 0.0);
  std::size_t count = 0;
  for (std::size_t v = 0; v < graph.num_nodes; ++v) {
    if (!node_in[v]) continue;
    ++count;
    for (std::size_t d = 0; d < dim; ++d) state[d] += emb[v * dim + d];
  }
  if (count > 0) {
    for (double& s : state) s /= static_cast<double>(count);
  }
  std::vector<double> out;
  out.reserve(candidates.size() * 2 * dim);
  for (std::size_t k : candidates) {
    const Edge& e = graph.edges[k];
    for (std::size_t d = 0; d < dim; ++d) out.push_back(emb[e.u * dim + d] + emb[e.v * dim + d]);
    out.insert(out.end(), state.begin(), state.end());
  }
  return Tensor({candidates.size(), 2 * dim}, std::move(out));
}

std::vector<double> graph_embeddings(const GnnModel& model, const Graph& graph, std::size_t* dim) {
  const Tensor emb = frozen_node_embeddings(model, make_batch(graph));
  *dim = emb.cols();
  return emb.values();
}

}  // namespace gnnx::detail
