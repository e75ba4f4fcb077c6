#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gnnx/explain/explainer.hpp"
#include "gnnx/gnn/model.hpp"

namespace gnnx {

struct EvalRecord {
  std::size_t graph_index = 0;
  std::uint64_t seed = 0;
  bool initial_correct = false;      // Y_f(G) = label
  bool explanation_correct = false;  // Y_f(G_e) = label
  std::size_t num_hard_edges = 0;
  std::optional<double> gt_jaccard;
  double wall_time_ms = 0.0;
};

// Mean of |1(Y_f(G) = Y) - 1(Y_f(G_e) = Y)| over the records. Empty input is a
// DomainError.
double fidelity_acc(const std::vector<EvalRecord>& records);

// Same quantity computed from graphs and hard 0/1 edge masks. G_e keeps every
// node; masked edges are dropped. Graphs must carry labels.
double fidelity_acc(const GnnModel& model, const std::vector<const Graph*>& graphs,
                    const std::vector<std::vector<double>>& hard_masks);

inline double faithfulness_from_fidelity(double fidelity) { return 1.0 - fidelity; }

struct SparsityFilterResult {
  std::vector<EvalRecord> kept;
  double kept_fraction = 1.0;  // 1 for empty input
};

// Keeps records with strictly fewer than `max_edges` hard edges.
SparsityFilterResult sparsity_filter(const std::vector<EvalRecord>& records, std::size_t max_edges = 20);

double jaccard(std::vector<Edge> a, std::vector<Edge> b);

// Mann-Whitney AUC of scores against binary labels, ties counted as 1/2.
// Empty when one of the classes is absent.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct GroundTruthAgreement {
  std::vector<std::optional<double>> jaccard;  // per explanation; empty when unannotated
  std::optional<double> auc;                   // soft weights vs ground-truth edges, pooled
  std::size_t skipped = 0;                     // explanations without an annotation
};

GroundTruthAgreement ground_truth_agreement(const Dataset& dataset, const std::vector<ExplanationRecord>& explanations);

// Explains each listed graph in order, timing every call on a monotonic clock.
std::vector<ExplanationRecord> explain_all(const Explainer& explainer, const Dataset& dataset,
                                           const std::vector<std::size_t>& indices, std::size_t k);

// One record per explanation. Ground-truth Jaccard is filled when annotated.
// Up to `workers` threads share the instances; the result order follows the
// input.
std::vector<EvalRecord> evaluate_explanations(const GnnModel& model, const Dataset& dataset,
                                              const std::vector<ExplanationRecord>& explanations, std::uint64_t seed,
                                              std::size_t workers = 1);

// Faithfulness of the explainer's top-k masks on seen test graphs minus the
// same on unseen graphs. An empty unseen set is a DomainError.
double generalization_gap(const Explainer& explainer, const GnnModel& model, const std::vector<const Graph*>& seen_test,
                          const std::vector<const Graph*>& unseen, std::size_t k);

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
};
MeanStderr mean_stderr(const std::vector<double>& values);

}  // namespace gnnx
