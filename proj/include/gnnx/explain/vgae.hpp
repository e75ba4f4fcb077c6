#pragma once

#include <memory>
#include <vector>

#include "gnnx/explain/common.hpp"
#include "gnnx/explain/explainer.hpp"

namespace gnnx {

// KL(N(mu, diag exp(logvar)) || N(0, I)) summed over all entries.
Tensor gaussian_kl(const Tensor& mu, const Tensor& logvar);

// Encoder q(z|G): frozen node embeddings -> MLP -> per-node (mu, log var).
// Decoder: sigmoid(z_u . z_v) on the existing edges only.
class VgaeExplainer : public Explainer {
 public:
  VgaeExplainer(ExplainerConfig config, std::shared_ptr<const GnnModel> model, ParameterSet params);

  static ParameterSet init_params(const GnnModel& model, const ExplainerConfig& config, Rng& rng);

  struct Encoding {
    Tensor mu, logvar;
  };
  static Encoding encode(const ParameterSet& params, const Tensor& embeddings);
  // Edge scores for latent codes z ([num_nodes x latent]).
  static Tensor decode(const Tensor& z, const GraphBatch& batch);

  ExplainerFamily family() const override { return ExplainerFamily::kVgae; }
  ExplanationMask explain(const Graph& graph, std::size_t k) const override;
  ParameterSet parameters() const override { return params_; }
  const ExplainerConfig& config() const override { return config_; }

 private:
  ExplainerConfig config_;
  std::shared_ptr<const GnnModel> model_;
  ParameterSet params_;
};

TrainedExplainer train_vgae(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                            const ExplainerConfig& config);

}  // namespace gnnx
