#pragma once

#include <cstdint>

#include "gnnx/graph/graph.hpp"

namespace gnnx {

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

// Stratified-by-label random assignment of every graph to train/val/test.
// Deterministic in `seed`. Ratios must sum to 1; a class with fewer graphs
// than non-empty parts is a DomainError.
Dataset split_dataset(Dataset dataset, const SplitRatios& ratios, std::uint64_t seed);

// Seen/unseen protocol: `unseen_fraction` of each class goes to kUnseen, and
// the seen remainder is split by `seen_ratios`.
Dataset split_seen_unseen(Dataset dataset, double unseen_fraction, const SplitRatios& seen_ratios,
                          std::uint64_t seed);

}  // namespace gnnx
