#include "gnnx/eval/oracle.hpp"

#include <bit>
#include <cstdint>
#include <numeric>

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

bool connected_subset(const Graph& g, std::uint32_t bits) {
  std::vector<std::size_t> parent(g.num_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = 0, first = 0;
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    if (!(bits >> k & 1u)) continue;
    const std::size_t a = find(g.edges[k].u), b = find(g.edges[k].v);
    if (components == 0) first = k;
    ++components;
    if (a != b) parent[a] = b;
  }
  const std::size_t root = find(g.edges[first].u);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    if ((bits >> k & 1u) && find(g.edges[k].u) != root) return false;
  }
  return true;
}

std::vector<std::size_t> indices_of(std::uint32_t bits) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; bits >> k; ++k) {
    if (bits >> k & 1u) out.push_back(k);
  }
  return out;
}

}  // namespace

OracleResult brute_force_best_subgraph(const GnnModel& model, const Graph& graph, std::size_t k, std::size_t target) {
  const std::size_t m = graph.num_edges();
  if (m > kOracleMaxEdges) {
    throw DomainError("brute-force oracle refuses graphs with more than " + std::to_string(kOracleMaxEdges) +
                      " edges (got " + std::to_string(m) + ")");
  }
  if (m == 0) throw DomainError("brute-force oracle: graph has no edges");
  if (k == 0) throw DomainError("brute-force oracle: k must be >= 1");
  if (target >= model.config().num_classes) throw DomainError("brute-force oracle: target class out of range");

  std::vector<std::uint32_t> subsets;
  for (std::uint32_t bits = 1; bits < (1u << m); ++bits) {
    if (static_cast<std::size_t>(std::popcount(bits)) <= k && connected_subset(graph, bits)) subsets.push_back(bits);
  }
  OracleResult best;
  best.candidates = subsets.size();
  bool have = false;
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < subsets.size(); start += kChunk) {
    const std::size_t stop = std::min(subsets.size(), start + kChunk);
    std::vector<std::vector<double>> masks;
    for (std::size_t i = start; i < stop; ++i) {
      std::vector<double> w(m, 0.0);
      for (std::size_t e : indices_of(subsets[i])) w[e] = 1.0;
      masks.push_back(std::move(w));
    }
    const auto preds = model.predict_masks(graph, masks);
    for (std::size_t i = start; i < stop; ++i) {
      const double p = preds[i - start].probs[target];
      auto edges = indices_of(subsets[i]);
      if (!have || p > best.probability || (p == best.probability && edges < best.edges)) {
        best.probability = p;
        best.edges = std::move(edges);
        have = true;
      }
    }
  }
  return best;
}

double achieved_probability(const GnnModel& model, const Graph& graph, const std::vector<std::size_t>& edges,
                            std::size_t target) {
  std::vector<double> w(graph.num_edges(), 0.0);
  for (std::size_t e : edges) w.at(e) = 1.0;
  return model.predict(graph, &w).probs.at(target);
}

}  // namespace gnnx
