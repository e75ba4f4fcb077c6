#include "gnnx/constraints/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"

namespace gnnx {

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kHardSize: return "hard_size";
    case ConstraintKind::kSparsity: return "sparsity";
    case ConstraintKind::kSoftSize: return "soft_size";
    case ConstraintKind::kVariational: return "variational";
  }
  return "hard_size";
}

ConstraintKind constraint_kind_from_string(const std::string& name) {
  if (name == "hard_size") return ConstraintKind::kHardSize;
  if (name == "sparsity") return ConstraintKind::kSparsity;
  if (name == "soft_size") return ConstraintKind::kSoftSize;
  if (name == "variational") return ConstraintKind::kVariational;
  throw UsageError("unknown constraint '" + name + "' (expected hard_size|sparsity|soft_size|variational)");
}

std::string to_string(SizeMetric metric) { return metric == SizeMetric::kL1 ? "l1" : "l2"; }

SizeMetric size_metric_from_string(const std::string& name) {
  if (name == "l1" || name == "L1") return SizeMetric::kL1;
  if (name == "l2" || name == "L2") return SizeMetric::kL2;
  throw UsageError("unknown size metric '" + name + "' (expected l1 or l2)");
}

InfoConstraint InfoConstraint::hard_size(std::size_t k) {
  InfoConstraint c;
  c.kind = ConstraintKind::kHardSize;
  c.max_edges = k;
  return c;
}

InfoConstraint InfoConstraint::sparsity_ratio(double k) {
  InfoConstraint c;
  c.kind = ConstraintKind::kSparsity;
  c.sparsity = k;
  return c;
}

InfoConstraint InfoConstraint::soft_size(SizeMetric metric, double lambda) {
  InfoConstraint c;
  c.kind = ConstraintKind::kSoftSize;
  c.metric = metric;
  c.weight = lambda;
  return c;
}

InfoConstraint InfoConstraint::variational(double prior, double lambda) {
  InfoConstraint c;
  c.kind = ConstraintKind::kVariational;
  c.prior = prior;
  c.weight = lambda;
  return c;
}

void validate_constraint(const InfoConstraint& c) {
  if (c.kind == ConstraintKind::kHardSize && c.max_edges < 1) throw ValidationError("constraint: K must be >= 1");
  if (c.kind == ConstraintKind::kSparsity && !(c.sparsity > 0.0 && c.sparsity < 1.0)) {
    throw ValidationError("constraint: sparsity k must lie in (0,1)");
  }
  if (!(c.weight >= 0.0)) throw ValidationError("constraint: lambda must be >= 0");
  if (c.kind == ConstraintKind::kVariational && !(c.prior > 0.0 && c.prior < 1.0)) {
    throw ValidationError("constraint: prior must lie in (0,1)");
  }
}

std::vector<std::size_t> top_k_indices(std::span<const double> weights, std::size_t k) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) { return weights[a] != weights[b] ? weights[a] > weights[b] : a < b; });
  order.resize(take);
  return order;
}

std::vector<double> hard_size_select(std::span<const double> weights, std::size_t k) {
  if (k < 1) throw DomainError("hard_size_select: K must be >= 1");
  std::vector<double> mask(weights.size(), 0.0);
  for (std::size_t i : top_k_indices(weights, k)) mask[i] = 1.0;
  return mask;
}

std::size_t sparsity_to_size(std::size_t num_edges, double k) {
  if (!(k > 0.0 && k < 1.0)) throw DomainError("sparsity_to_size: k must lie in (0,1)");
  // Guard against k * n landing a rounding error above an integer.
  const double scaled = k * static_cast<double>(num_edges);
  const double nearest = std::round(scaled);
  const double size = std::abs(scaled - nearest) < 1e-9 ? nearest : std::ceil(scaled);
  return std::max<std::size_t>(1, static_cast<std::size_t>(size));
}

std::size_t sparsity_to_size(const Graph& graph, double k) { return sparsity_to_size(graph.num_edges(), k); }

Tensor soft_size_loss(const Tensor& mask, SizeMetric metric, double lambda) {
  if (mask.numel() == 0) return Tensor::scalar(0.0);
  const Tensor gap = ops::rsub_scalar(1.0, mask);
  const Tensor norm = metric == SizeMetric::kL1 ? ops::sum(gap) : ops::sqrt(ops::sum(ops::mul(gap, gap)));
  return ops::mul_scalar(norm, lambda);
}

double bernoulli_kl(double p, double prior) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  prior = std::clamp(prior, kProbClamp, 1.0 - kProbClamp);
  return p * std::log(p / prior) + (1.0 - p) * std::log((1.0 - p) / (1.0 - prior));
}

Tensor variational_loss(const Tensor& probs, double prior, double lambda) {
  if (probs.numel() == 0) return Tensor::scalar(0.0);
  prior = std::clamp(prior, kProbClamp, 1.0 - kProbClamp);
  const Tensor p = ops::clamp(probs, kProbClamp, 1.0 - kProbClamp);
  const Tensor q = ops::rsub_scalar(1.0, p);
  const Tensor pos = ops::mul(p, ops::add_scalar(ops::log(p), -std::log(prior)));
  const Tensor neg = ops::mul(q, ops::add_scalar(ops::log(q), -std::log(1.0 - prior)));
  return ops::mul_scalar(ops::sum(ops::add(pos, neg)), lambda);
}

Tensor info_loss(const InfoConstraint& c, const Tensor& probs, const Tensor& mask) {
  switch (c.kind) {
    case ConstraintKind::kSoftSize: return soft_size_loss(mask, c.metric, c.weight);
    case ConstraintKind::kVariational: return variational_loss(probs, c.prior, c.weight);
    case ConstraintKind::kHardSize:
    case ConstraintKind::kSparsity: break;
  }
  return Tensor::scalar(0.0);
}

std::optional<std::size_t> edge_budget(const InfoConstraint& c, std::size_t num_edges) {
  if (c.kind == ConstraintKind::kHardSize) return c.max_edges;
  if (c.kind == ConstraintKind::kSparsity) return sparsity_to_size(num_edges, c.sparsity);
  return std::nullopt;
}

}  // namespace gnnx
