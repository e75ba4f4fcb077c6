#pragma once

#include <memory>
#include <vector>

#include "gnnx/explain/common.hpp"
#include "gnnx/explain/explainer.hpp"

namespace gnnx {

// Which graph the generated mask produces and which class it must support.
enum class MaskObjective {
  kFactual,         // weights = mask, target = Y_f(G)
  kCounterfactual,  // weights = 1 - mask (mask marks deletions), target = runner-up class
};

// Edge-mask generator: frozen base-model node embeddings -> [h_u | h_v] ->
// MLP -> logit of p_i.
class MaskGenerator {
 public:
  MaskGenerator(std::shared_ptr<const GnnModel> model, ParameterSet params);

  // `initial_logit` is the output bias, so p starts near sigmoid of it.
  static ParameterSet init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng,
                                  double initial_logit = 2.0);
  // Logits for every edge of the batch, recorded on the tape of `params` if
  // tracked.
  static Tensor edge_logits(const ParameterSet& params, const Tensor& embeddings, const GraphBatch& batch);

  std::vector<double> edge_probs(const Graph& graph) const;
  const ParameterSet& params() const { return params_; }
  const GnnModel& model() const { return *model_; }

 private:
  std::shared_ptr<const GnnModel> model_;
  ParameterSet params_;
};

struct MaskTrainResult {
  ParameterSet params;
  std::vector<TrainLogEntry> log;
};

// Minimises CE(P_f(weights applied to G), Y*) + L_INFO over the prepared
// batches, sampling relaxed masks with an annealed temperature. Targets are
// taken from the batches.
MaskTrainResult train_mask_generator(const GnnModel& model, std::vector<detail::PreparedBatch> batches,
                                     const ExplainerConfig& config, MaskObjective objective);

class MaskGenExplainer : public Explainer {
 public:
  MaskGenExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);

  ExplainerFamily family() const override { return ExplainerFamily::kMaskGen; }
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return generator_.params(); }
  const ExplainerConfig& config() const override { return config_; }
  const MaskGenerator& generator() const { return generator_; }

 private:
  ExplainerConfig config_;
  MaskGenerator generator_;
};

TrainedExplainer train_maskgen(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                               const ExplainerConfig& config);

}  // namespace gnnx
