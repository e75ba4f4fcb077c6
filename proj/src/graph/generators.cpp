#include "gnnx/graph/generators.hpp"

#include <algorithm>
#include <set>

#include "gnnx/error.hpp"

namespace gnnx {

Motif house_motif() {
  return {"house", 5, {{1, 2}, {2, 3}, {3, 4}, {1, 4}, {0, 1}, {0, 2}}};
}

Motif cycle_motif() { return {"cycle", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}}}; }

Motif grid_motif() {
  Motif m{"grid", 9, {}};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t id = r * 3 + c;
      if (c + 1 < 3) m.edges.push_back({id, id + 1});
      if (r + 1 < 3) m.edges.push_back({id, id + 3});
    }
  }
  return m;
}

Motif wheel_motif() {
  Motif m{"wheel", 6, {}};
  for (std::size_t i = 1; i <= 5; ++i) {
    m.edges.push_back({0, i});
    m.edges.push_back(Edge::canonical(i, i % 5 + 1));
  }
  return m;
}

Graph gen_ba(std::size_t num_nodes, std::size_t attach, Rng& rng) {
  if (attach < 1 || num_nodes < attach + 1) {
    throw DomainError("gen_ba: need num_nodes >= attach + 1 >= 2 (got num_nodes=" + std::to_string(num_nodes) +
                      ", attach=" + std::to_string(attach) + ")");
  }
  std::vector<Edge> edges;
  // Each node appears once per incident edge, so uniform draws from this list
  // are degree-proportional.
  std::vector<std::size_t> endpoints;
  std::vector<std::size_t> targets(attach);
  for (std::size_t i = 0; i < attach; ++i) targets[i] = i;
  for (std::size_t node = attach; node < num_nodes; ++node) {
    for (std::size_t t : targets) {
      edges.push_back(Edge::canonical(t, node));
      endpoints.push_back(t);
      endpoints.push_back(node);
    }
    std::set<std::size_t> chosen;
    while (chosen.size() < attach) chosen.insert(endpoints[rng.below(endpoints.size())]);
    targets.assign(chosen.begin(), chosen.end());
  }
  return make_graph(num_nodes, edges);
}

Graph gen_ba(std::size_t num_nodes, std::size_t attach, std::uint64_t seed) {
  Rng rng(seed);
  return gen_ba(num_nodes, attach, rng);
}

std::vector<Edge> attach_motif(std::size_t& num_nodes, std::vector<Edge>& edges, std::size_t base_nodes,
                               const Motif& motif, Rng& rng) {
  if (base_nodes == 0) throw DomainError("attach_motif: empty base graph");
  const std::size_t offset = num_nodes;
  std::vector<Edge> motif_edges;
  for (const Edge& e : motif.edges) motif_edges.push_back(Edge::canonical(e.u + offset, e.v + offset));
  edges.insert(edges.end(), motif_edges.begin(), motif_edges.end());
  num_nodes += motif.num_nodes;
  const std::size_t motif_node = offset + rng.below(motif.num_nodes);
  const std::size_t base_node = rng.below(base_nodes);
  edges.push_back(Edge::canonical(motif_node, base_node));
  std::sort(motif_edges.begin(), motif_edges.end());
  return motif_edges;
}

namespace {

struct Composed {
  Graph graph;
  MotifAnnotation annotation;
};

Composed compose(std::size_t base_nodes, const std::vector<Motif>& motifs, std::size_t node_dim, std::size_t label,
                 Rng& rng) {
  const Graph base = gen_ba(base_nodes, 1, rng);
  std::size_t n = base.num_nodes;
  std::vector<Edge> edges = base.edges;
  Composed out;
  for (const Motif& m : motifs) {
    auto motif_edges = attach_motif(n, edges, base_nodes, m, rng);
    out.annotation.ground_truth_edges.insert(out.annotation.ground_truth_edges.end(), motif_edges.begin(),
                                             motif_edges.end());
    out.annotation.motif_names.push_back(m.name);
  }
  std::sort(out.annotation.ground_truth_edges.begin(), out.annotation.ground_truth_edges.end());
  out.graph = make_graph(n, edges, node_dim, 1, label);
  return out;
}

}  // namespace

Dataset gen_ba2motifs(std::size_t count, std::uint64_t seed) {
  if (count < 2) throw DomainError("gen_ba2motifs: count must be >= 2");
  Dataset ds;
  ds.name = "ba2motifs";
  ds.num_classes = 2;
  const Rng root(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = root.derive(i);
    const std::size_t label = i % 2;
    Composed c = compose(20, {label == 1 ? house_motif() : cycle_motif()}, 1, label, rng);
    ds.graphs.push_back(std::move(c.graph));
    ds.annotations.emplace_back(std::move(c.annotation));
  }
  ds.split.assign(count, Split::kUnassigned);
  return ds;
}

Dataset gen_ba_multishapes(std::size_t count, std::uint64_t seed) {
  if (count < 2) throw DomainError("gen_ba_multishapes: count must be >= 2");
  const std::vector<Motif> all = {house_motif(), grid_motif(), wheel_motif()};
  // Class-0 variants: plain, one motif each, all three. Class 1: the pairs.
  const std::vector<std::vector<std::size_t>> class0 = {{}, {0}, {1}, {2}, {0, 1, 2}};
  const std::vector<std::vector<std::size_t>> class1 = {{0, 1}, {0, 2}, {1, 2}};
  Dataset ds;
  ds.name = "ba_multishapes";
  ds.num_classes = 2;
  const Rng root(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = root.derive(i);
    const std::size_t label = i % 2;
    const auto& variants = label == 0 ? class0 : class1;
    const auto& pick = variants[rng.below(variants.size())];
    std::vector<Motif> motifs;
    std::size_t motif_nodes = 0;
    for (std::size_t m : pick) {
      motifs.push_back(all[m]);
      motif_nodes += all[m].num_nodes;
    }
    Composed c = compose(40 - motif_nodes, motifs, 10, label, rng);
    ds.graphs.push_back(std::move(c.graph));
    ds.annotations.emplace_back(std::move(c.annotation));
  }
  ds.split.assign(count, Split::kUnassigned);
  return ds;
}

}  // namespace gnnx
