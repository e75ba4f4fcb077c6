#include "gnnx/graph/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gnnx/error.hpp"
#include "gnnx/random.hpp"

namespace gnnx {
namespace {

// Largest-remainder apportionment of n items over the ratios.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& ratios) {
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    const double exact = static_cast<double>(n) * ratios[j];
    counts[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[j];
    remainders.emplace_back(exact - static_cast<double>(counts[j]), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
  return counts;
}

Dataset assign(Dataset ds, const std::vector<double>& ratios, const std::vector<Split>& parts, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw DomainError("split: negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("split: ratios must sum to 1");
  const std::size_t nonempty = static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }));

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.graphs[i].label) throw DomainError("split: graph " + std::to_string(i) + " has no label");
    by_class[*ds.graphs[i].label].push_back(i);
  }
  Rng rng(seed);
  ds.split.assign(ds.size(), Split::kUnassigned);
  for (auto& [label, members] : by_class) {
    if (members.size() < nonempty) {
      throw DomainError("split: class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " graphs, fewer than the " + std::to_string(nonempty) + " parts");
    }
    rng.shuffle(members);
    const auto counts = apportion(members.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      for (std::size_t k = 0; k < counts[j]; ++k) ds.split[members[pos++]] = parts[j];
    }
  }
  return ds;
}

}  // namespace

Dataset split_dataset(Dataset dataset, const SplitRatios& r, std::uint64_t seed) {
  return assign(std::move(dataset), {r.train, r.val, r.test}, {Split::kTrain, Split::kVal, Split::kTest}, seed);
}

Dataset split_seen_unseen(Dataset dataset, double unseen_fraction, const SplitRatios& r, std::uint64_t seed) {
  if (!(unseen_fraction > 0.0 && unseen_fraction < 1.0)) throw DomainError("split: unseen fraction must be in (0,1)");
  const double seen = 1.0 - unseen_fraction;
  Dataset ds = assign(std::move(dataset), {seen, unseen_fraction}, {Split::kTrain, Split::kUnseen}, seed);
  // Nested stratified split of the seen part.
  Dataset seen_part;
  seen_part.num_classes = ds.num_classes;
  std::vector<std::size_t> seen_index;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.split[i] != Split::kTrain) continue;
    seen_index.push_back(i);
    seen_part.graphs.push_back(ds.graphs[i]);
  }
  seen_part.annotations.resize(seen_part.graphs.size());
  seen_part.split.assign(seen_part.graphs.size(), Split::kUnassigned);
  seen_part = assign(std::move(seen_part), {r.train, r.val, r.test}, {Split::kTrain, Split::kVal, Split::kTest},
                     Rng::derive_seed(seed, 1));
  for (std::size_t k = 0; k < seen_index.size(); ++k) ds.split[seen_index[k]] = seen_part.split[k];
  return ds;
}

}  // namespace gnnx
