#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gnnx/explain/maskgen.hpp"

namespace gnnx {

struct ModelLevelResult {
  std::size_t target_class = 0;
  Graph subgraph;  // G_m, relabelled to nodes 0..n-1, features from a supporting instance
  std::string canonical;
  std::size_t support = 0;    // instances whose top-K subgraph has this form
  std::size_t instances = 0;  // class-c instances voted
  std::size_t representative = 0;  // dataset index of the first supporting instance
  std::vector<Edge> representative_edges;  // G_m's edges in that instance's ids
};

// Model-level generator for one class: a mask generator trained across the
// class-c train graphs with Y* = c. Its per-instance explanation targets c.
class ModelLevelExplainer : public Explainer {
 public:
  ModelLevelExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);

  ExplainerFamily family() const override { return ExplainerFamily::kModelLevel; }
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return generator_.params(); }
  const ExplainerConfig& config() const override { return config_; }

  // Votes the top-K subgraphs of `indices` under canonical form and returns
  // the most frequent one (ties: earliest first occurrence).
  ModelLevelResult summarize(const Dataset& dataset, const std::vector<std::size_t>& indices, std::size_t k) const;

 private:
  ExplainerConfig config_;
  MaskGenerator generator_;
};

// Train-split graphs labelled `c`; DomainError when there are none.
std::vector<std::size_t> class_indices(const Dataset& dataset, std::size_t c);

TrainedExplainer train_model_level(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                   const ExplainerConfig& config);

// Trains on class config.target_class and votes its explanation subgraph.
ModelLevelResult model_level_generate(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                      const ExplainerConfig& config);

}  // namespace gnnx
