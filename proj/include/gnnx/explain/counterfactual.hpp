#pragma once

#include <memory>
#include <vector>

#include "gnnx/explain/maskgen.hpp"

namespace gnnx {

struct CounterfactualResult {
  std::vector<double> deletion_scores;  // generator p_i per edge
  std::vector<std::size_t> deleted;     // edge indices, most important first
  std::vector<double> retained;         // 0/1 mask of G_ce; complement of `deleted`
  std::size_t original_label = 0;
  std::size_t target_label = 0;  // runner-up class of P_f(G)
  std::size_t new_label = 0;     // Y_f(G_ce)
  bool flipped() const { return new_label != original_label; }
};

// Mask generator trained with weights = 1 - deletion mask and the runner-up
// class as target. At inference the deletion set is the shortest prefix of
// the top-K deletion ranking that changes the prediction, or the full top-K
// when no prefix does.
class CounterfactualExplainer : public Explainer {
 public:
  CounterfactualExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);

  CounterfactualResult counterfactual(const Graph& graph, std::size_t budget) const;

  ExplainerFamily family() const override { return ExplainerFamily::kCounterfactual; }
  // edge_weights are deletion scores, hard_edges mark the deletion set and
  // target_label is the runner-up class.
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return generator_.params(); }
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  MaskGenerator generator_;
};

TrainedExplainer train_counterfactual(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                      const ExplainerConfig& config);

}  // namespace gnnx
