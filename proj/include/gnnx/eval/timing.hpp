#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gnnx/explain/explainer.hpp"

namespace gnnx {

struct TimingResult {
  double mean_ms = 0.0;
  // Standard error of the per-run means when there are several runs (seeds),
  // otherwise of the individual call times.
  double stderr_ms = 0.0;
  std::vector<double> run_means_ms;
  std::size_t samples = 0;
};

// Times `fn` once per graph for every run, sequentially. Each run first makes
// one untimed warm-up call on the first graph.
TimingResult time_calls(const std::vector<std::function<void(const Graph&)>>& runs,
                        const std::vector<const Graph*>& graphs);

// One run per explainer (typically one per training seed), top-k explanations.
TimingResult time_inference(const std::vector<const Explainer*>& explainers, const std::vector<const Graph*>& graphs,
                            std::size_t k);

}  // namespace gnnx
