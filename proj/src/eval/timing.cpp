#include "gnnx/eval/timing.hpp"

#include <atomic>
#include <chrono>

#include "gnnx/error.hpp"
#include "gnnx/eval/metrics.hpp"

namespace gnnx {
namespace {
std::atomic<std::size_t> timing_sink{0};
}  // namespace

TimingResult time_calls(const std::vector<std::function<void(const Graph&)>>& runs,
                        const std::vector<const Graph*>& graphs) {
  if (runs.empty()) throw DomainError("timing: no runs");
  if (graphs.empty()) throw DomainError("timing: no graphs");
  TimingResult out;
  std::vector<double> all;
  for (const auto& fn : runs) {
    fn(*graphs.front());  // warm-up, not timed
    double total = 0.0;
    for (const Graph* g : graphs) {
      const auto start = std::chrono::steady_clock::now();
      fn(*g);
      const auto stop = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
      all.push_back(ms);
      total += ms;
    }
    out.run_means_ms.push_back(total / static_cast<double>(graphs.size()));
  }
  out.samples = all.size();
  out.mean_ms = mean_stderr(all).mean;
  out.stderr_ms = runs.size() > 1 ? mean_stderr(out.run_means_ms).stderr_ : mean_stderr(all).stderr_;
  return out;
}

TimingResult time_inference(const std::vector<const Explainer*>& explainers, const std::vector<const Graph*>& graphs,
                            std::size_t k) {
  std::vector<std::function<void(const Graph&)>> runs;
  for (const Explainer* e : explainers) {
    runs.push_back([e, k](const Graph& g) {
      const ExplanationMask m = e->explain(g, k);
      // Keep the result observable so the call is not elided.
      timing_sink.store(m.edge_weights.size(), std::memory_order_relaxed);
    });
  }
  return time_calls(runs, graphs);
}

}  // namespace gnnx
