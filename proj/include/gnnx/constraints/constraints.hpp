#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gnnx/graph/graph.hpp"
#include "gnnx/tensor/tensor.hpp"

namespace gnnx {

enum class ConstraintKind { kHardSize, kSparsity, kSoftSize, kVariational };
enum class SizeMetric { kL1, kL2 };

std::string to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& name);
std::string to_string(SizeMetric metric);
SizeMetric size_metric_from_string(const std::string& name);

inline constexpr double kProbClamp = 1e-6;

struct InfoConstraint {
  ConstraintKind kind = ConstraintKind::kHardSize;
  std::size_t max_edges = 6;          // HardSize K
  double sparsity = 0.1;              // Sparsity k
  SizeMetric metric = SizeMetric::kL1;
  double weight = 0.005;              // lambda
  double prior = 0.3;                 // Variational prior p

  static InfoConstraint hard_size(std::size_t k);
  static InfoConstraint sparsity_ratio(double k);
  static InfoConstraint soft_size(SizeMetric metric, double lambda = 0.005);
  static InfoConstraint variational(double prior = 0.3, double lambda = 1.0);
};

// Throws ValidationError on K < 1, k outside (0,1), negative lambda or a
// prior outside (0,1).
void validate_constraint(const InfoConstraint& c);

// Indices of the min(K, n) largest weights, highest first; ties go to the
// lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> weights, std::size_t k);

// 0/1 mask with exactly min(K, n) ones at the top-K weights.
std::vector<double> hard_size_select(std::span<const double> weights, std::size_t k);

// ceil(k * num_edges), at least 1.
std::size_t sparsity_to_size(std::size_t num_edges, double k);
std::size_t sparsity_to_size(const Graph& graph, double k);

// lambda * ||1 - mask|| over the existing edges; L2 uses the Euclidean norm
// with derivative 0 at the all-ones mask.
Tensor soft_size_loss(const Tensor& mask, SizeMetric metric, double lambda);

// KL(Bern(p) || Bern(prior)) with both arguments clamped to
// [kProbClamp, 1 - kProbClamp].
double bernoulli_kl(double p, double prior);

// lambda * sum_i KL(Bern(p_i) || Bern(prior)), differentiable in p.
Tensor variational_loss(const Tensor& probs, double prior, double lambda);

// The differentiable L_INFO term of a constraint for edge probabilities
// `probs` and the (sampled) mask applied to the graph. Size-budget variants
// act through top-K selection and contribute zero here.
Tensor info_loss(const InfoConstraint& c, const Tensor& probs, const Tensor& mask);

// Edge budget implied by a size-type constraint, if any.
std::optional<std::size_t> edge_budget(const InfoConstraint& c, std::size_t num_edges);

}  // namespace gnnx
