#include "gnnx/graph/canonical.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

using Adjacency = std::vector<std::vector<bool>>;

// 1-WL colour refinement; returns a stable colour per node.
std::vector<std::size_t> refine_colours(const Adjacency& adj) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> colour(n, 0);
  for (std::size_t round = 0; round <= n; ++round) {
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> ids;
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> signature(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<std::size_t> neigh;
      for (std::size_t w = 0; w < n; ++w) {
        if (adj[v][w]) neigh.push_back(colour[w]);
      }
      std::sort(neigh.begin(), neigh.end());
      signature[v] = {colour[v], std::move(neigh)};
      ids.emplace(signature[v], 0);
    }
    std::size_t next = 0;
    for (auto& [sig, id] : ids) id = next++;
    std::vector<std::size_t> updated(n);
    for (std::size_t v = 0; v < n; ++v) updated[v] = ids[signature[v]];
    const bool stable = std::set<std::size_t>(updated.begin(), updated.end()).size() ==
                        std::set<std::size_t>(colour.begin(), colour.end()).size();
    colour = std::move(updated);
    if (stable) break;
  }
  return colour;
}

// Minimal adjacency bit-string over orderings that sort nodes by colour and
// permute freely within each colour class.
std::string canonical_component(const Adjacency& adj) {
  const std::size_t n = adj.size();
  const auto colour = refine_colours(adj);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return colour[a] != colour[b] ? colour[a] < colour[b] : a < b;
  });
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [begin, end) in `order`
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && colour[order[j]] == colour[order[i]]) ++j;
    blocks.emplace_back(i, j);
    i = j;
  }
  double budget = 1.0;
  for (auto [b, e] : blocks) {
    for (std::size_t k = 2; k <= e - b; ++k) budget *= static_cast<double>(k);
  }
  if (budget > 1e7) throw DomainError("canonical_form: subgraph too symmetric for exhaustive canonicalisation");

  std::string best;
  std::string header;
  for (std::size_t v : order) header += std::to_string(colour[v]) + ",";
  auto encode = [&](const std::vector<std::size_t>& perm) {
    std::string bits;
    bits.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) bits.push_back(adj[perm[i]][perm[j]] ? '1' : '0');
    }
    return bits;
  };
  // Odometer over per-block permutations.
  std::function<void(std::size_t)> visit = [&](std::size_t block) {
    if (block == blocks.size()) {
      std::string bits = encode(order);
      if (best.empty() || bits < best) best = std::move(bits);
      return;
    }
    auto [b, e] = blocks[block];
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(b), order.begin() + static_cast<std::ptrdiff_t>(e));
    do {
      visit(block + 1);
    } while (std::next_permutation(order.begin() + static_cast<std::ptrdiff_t>(b),
                                   order.begin() + static_cast<std::ptrdiff_t>(e)));
  };
  visit(0);
  return std::to_string(n) + ":" + header + best;
}

}  // namespace

std::vector<Edge> compact_edges(const std::vector<Edge>& edges, std::vector<std::size_t>* original_ids) {
  std::set<std::size_t> nodes;
  for (const Edge& e : edges) {
    nodes.insert(e.u);
    nodes.insert(e.v);
  }
  std::map<std::size_t, std::size_t> relabel;
  for (std::size_t v : nodes) relabel.emplace(v, relabel.size());
  if (original_ids) original_ids->assign(nodes.begin(), nodes.end());
  std::vector<Edge> out;
  for (const Edge& e : edges) out.push_back(Edge::canonical(relabel[e.u], relabel[e.v]));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string canonical_form(const std::vector<Edge>& edges) {
  const auto compact = compact_edges(edges);
  std::size_t n = 0;
  for (const Edge& e : compact) n = std::max(n, e.v + 1);
  // Split into connected components.
  std::vector<std::size_t> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (const Edge& e : compact) comp[find(e.u)] = find(e.v);
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t v = 0; v < n; ++v) members[find(v)].push_back(v);
  std::vector<std::string> parts;
  for (const auto& [root, nodes] : members) {
    std::map<std::size_t, std::size_t> local;
    for (std::size_t v : nodes) local.emplace(v, local.size());
    Adjacency adj(nodes.size(), std::vector<bool>(nodes.size(), false));
    for (const Edge& e : compact) {
      if (find(e.u) != root) continue;
      adj[local[e.u]][local[e.v]] = adj[local[e.v]][local[e.u]] = true;
    }
    parts.push_back(canonical_component(adj));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += "[" + p + "]";
  return out;
}

bool isomorphic(const std::vector<Edge>& a, const std::vector<Edge>& b) {
  return canonical_form(a) == canonical_form(b);
}

}  // namespace gnnx
