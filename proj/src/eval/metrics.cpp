#include "gnnx/eval/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

std::size_t label_of(const Graph& g) {
  if (!g.label) throw DomainError("fidelity: graph has no label");
  return *g.label;
}

std::vector<double> hard_mask(const Graph& g, const std::vector<Edge>& edges) {
  std::vector<double> w(g.num_edges(), 0.0);
  for (const Edge& e : edges) {
    const auto k = g.find_edge(e);
    if (!k) throw ValidationError("explanation edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                  ") is not in the graph");
    w[*k] = 1.0;
  }
  return w;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception
// is rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  if (workers == 0) throw ValidationError("worker count must be >= 1");
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

double fidelity_acc(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw DomainError("fidelity_acc: no instances");
  std::size_t changed = 0;
  for (const EvalRecord& r : records) changed += r.initial_correct != r.explanation_correct;
  return static_cast<double>(changed) / static_cast<double>(records.size());
}

double fidelity_acc(const GnnModel& model, const std::vector<const Graph*>& graphs,
                    const std::vector<std::vector<double>>& hard_masks) {
  if (graphs.size() != hard_masks.size()) throw DimensionError("fidelity_acc: graphs and masks differ in length");
  std::vector<EvalRecord> records(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = *graphs[i];
    for (double w : hard_masks[i]) {
      if (w != 0.0 && w != 1.0) throw DomainError("fidelity_acc: masks must be hard 0/1");
    }
    const std::size_t y = label_of(g);
    records[i].initial_correct = model.predict(g).label == y;
    records[i].explanation_correct = model.predict(g, &hard_masks[i]).label == y;
  }
  return fidelity_acc(records);
}

SparsityFilterResult sparsity_filter(const std::vector<EvalRecord>& records, std::size_t max_edges) {
  SparsityFilterResult out;
  for (const EvalRecord& r : records) {
    if (r.num_hard_edges < max_edges) out.kept.push_back(r);
  }
  if (!records.empty()) out.kept_fraction = static_cast<double>(out.kept.size()) / static_cast<double>(records.size());
  return out;
}

double jaccard(std::vector<Edge> a, std::vector<Edge> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  if (a.empty() && b.empty()) return 1.0;
  std::vector<Edge> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(a.size() + b.size() - common.size());
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("roc_auc: scores and labels differ in length");
  // Rank-sum form: sort once, give tied scores their average rank.
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives), n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

GroundTruthAgreement ground_truth_agreement(const Dataset& dataset,
                                            const std::vector<ExplanationRecord>& explanations) {
  GroundTruthAgreement out;
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const ExplanationRecord& ex : explanations) {
    if (ex.graph_index >= dataset.size()) throw ValidationError("explanation for graph " + std::to_string(ex.graph_index) + " outside the dataset");
    const auto& ann = ex.graph_index < dataset.annotations.size() ? dataset.annotations[ex.graph_index] : std::nullopt;
    if (!ann) {
      out.jaccard.push_back(std::nullopt);
      ++out.skipped;
      continue;
    }
    const Graph& g = dataset.graphs[ex.graph_index];
    if (ex.edge_weights.size() != g.num_edges()) throw DimensionError("explanation for graph " + std::to_string(ex.graph_index) + " has the wrong number of weights");
    out.jaccard.push_back(jaccard(ex.hard_edges, ann->ground_truth_edges));
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
      scores.push_back(ex.edge_weights[k]);
      labels.push_back(std::binary_search(ann->ground_truth_edges.begin(), ann->ground_truth_edges.end(), g.edges[k]));
    }
  }
  out.auc = roc_auc(scores, labels);
  return out;
}

std::vector<ExplanationRecord> explain_all(const Explainer& explainer, const Dataset& dataset,
                                           const std::vector<std::size_t>& indices, std::size_t k) {
  std::vector<ExplanationRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    const Graph& g = dataset.graphs.at(i);
    const auto start = std::chrono::steady_clock::now();
    const ExplanationMask m = explainer.explain(g, k);
    const auto stop = std::chrono::steady_clock::now();
    ExplanationRecord r;
    r.graph_index = i;
    r.target_label = m.target_label;
    r.edge_weights = m.edge_weights;
    for (std::size_t e : m.hard_indices()) r.hard_edges.push_back(g.edges[e]);
    r.family = to_string(explainer.family());
    r.wall_time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalRecord> evaluate_explanations(const GnnModel& model, const Dataset& dataset,
                                              const std::vector<ExplanationRecord>& explanations, std::uint64_t seed,
                                              std::size_t workers) {
  std::vector<EvalRecord> out(explanations.size());
  parallel_for(explanations.size(), workers, [&](std::size_t i) {
    const ExplanationRecord& ex = explanations[i];
    if (ex.graph_index >= dataset.size()) {
      throw ValidationError("explanation for graph " + std::to_string(ex.graph_index) + " outside the dataset");
    }
    const Graph& g = dataset.graphs[ex.graph_index];
    const std::size_t y = label_of(g);
    const std::vector<double> mask = hard_mask(g, ex.hard_edges);
    EvalRecord& r = out[i];
    r.graph_index = ex.graph_index;
    r.seed = seed;
    r.initial_correct = model.predict(g).label == y;
    r.explanation_correct = model.predict(g, &mask).label == y;
    r.num_hard_edges = ex.hard_edges.size();
    r.wall_time_ms = ex.wall_time_ms;
    const auto& ann = ex.graph_index < dataset.annotations.size() ? dataset.annotations[ex.graph_index] : std::nullopt;
    if (ann) r.gt_jaccard = jaccard(ex.hard_edges, ann->ground_truth_edges);
  });
  return out;
}

double generalization_gap(const Explainer& explainer, const GnnModel& model, const std::vector<const Graph*>& seen_test,
                          const std::vector<const Graph*>& unseen, std::size_t k) {
  if (unseen.empty()) throw DomainError("generalization gap: no unseen graphs");
  if (seen_test.empty()) throw DomainError("generalization gap: no seen test graphs");
  auto faithfulness = [&](const std::vector<const Graph*>& graphs) {
    std::vector<std::vector<double>> masks;
    for (const Graph* g : graphs) {
      const ExplanationMask m = explainer.explain(*g, k);
      masks.push_back(*m.hard_edges);
    }
    return faithfulness_from_fidelity(fidelity_acc(model, graphs, masks));
  };
  return faithfulness(seen_test) - faithfulness(unseen);
}

MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

}  // namespace gnnx
