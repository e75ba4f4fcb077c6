#pragma once

#include <memory>
#include <vector>

#include "gnnx/explain/explainer.hpp"

namespace gnnx {

// |d logit[Y_f(G)] / d w_i| at all-ones edge weights.
std::vector<double> saliency_gradients(const GnnModel& model, const Graph& graph);

// Min-max normalised saliency; uniform ones when every gradient is equal
// (in particular all zero).
std::vector<double> normalize_saliency(const std::vector<double>& gradients);

class SaliencyExplainer : public Explainer {
 public:
  SaliencyExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model);
  ExplainerFamily family() const override { return ExplainerFamily::kSaliency; }
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  std::shared_ptr<const GnnModel> model_;
};

// Uniform random weights. The stream is derived from the seed and the
// graph's edge list, so repeated calls on one graph agree.
std::vector<double> random_weights(const Graph& graph, std::uint64_t seed);

class RandomExplainer : public Explainer {
 public:
  RandomExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model);
  ExplainerFamily family() const override { return ExplainerFamily::kRandom; }
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  std::shared_ptr<const GnnModel> model_;
};

ExplanationMask explain_random(const Graph& graph, std::size_t k, std::uint64_t seed);

}  // namespace gnnx
