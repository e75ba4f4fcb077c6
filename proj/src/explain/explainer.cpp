#include "gnnx/explain/explainer.hpp"

#include <json.hpp>

#include "gnnx/error.hpp"
#include "gnnx/explain/baselines.hpp"
#include "gnnx/explain/counterfactual.hpp"
#include "gnnx/explain/flow.hpp"
#include "gnnx/explain/maskgen.hpp"
#include "gnnx/explain/model_level.hpp"
#include "gnnx/explain/rl_mdp.hpp"
#include "gnnx/explain/vgae.hpp"

namespace gnnx {
namespace {

const std::pair<ExplainerFamily, const char*> kFamilyNames[] = {
    {ExplainerFamily::kMaskGen, "maskgen"},         {ExplainerFamily::kVgae, "vgae"},
    {ExplainerFamily::kRlMdp, "rl_mdp"},            {ExplainerFamily::kFlowDag, "flow_dag"},
    {ExplainerFamily::kCounterfactual, "counterfactual"}, {ExplainerFamily::kModelLevel, "model_level"},
    {ExplainerFamily::kSaliency, "saliency"},       {ExplainerFamily::kRandom, "random"},
};

// Parameters a fresh explainer of this family would have, for checking
// restored checkpoints.
ParameterSet expected_params(const ExplainerConfig& config, const GnnModel& model) {
  Rng rng(0);
  switch (config.family) {
    case ExplainerFamily::kMaskGen:
    case ExplainerFamily::kCounterfactual:
    case ExplainerFamily::kModelLevel:
      return MaskGenerator::init_params(model, config, rng);
    case ExplainerFamily::kVgae:
      return VgaeExplainer::init_params(model, config, rng);
    case ExplainerFamily::kRlMdp:
      return PolicyAgent::init_params(model, config, rng);
    case ExplainerFamily::kFlowDag: {
      ParameterSet p;
      const std::size_t emb = model.config().num_layers * model.config().hidden_dim;
      detail::add_mlp(p, "flow", {2 * emb, config.hidden_dim, 1}, rng);
      return p;
    }
    case ExplainerFamily::kSaliency:
    case ExplainerFamily::kRandom:
      return {};
  }
  return {};
}

}  // namespace

std::string to_string(ExplainerFamily family) {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  throw ContractError("unknown explainer family");
}

ExplainerFamily family_from_string(const std::string& name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (name == n) return f;
  }
  throw UsageError("unknown explainer family '" + name +
                   "' (expected maskgen|vgae|rl_mdp|flow_dag|counterfactual|model_level|saliency|random)");
}

ExplainerConfig default_explainer_config(ExplainerFamily family) {
  ExplainerConfig c;
  c.family = family;
  if (family == ExplainerFamily::kCounterfactual) c.constraint = InfoConstraint::variational(0.05, 0.1);
  return c;
}

void validate_explainer_config(const ExplainerConfig& c) {
  auto fail = [](const std::string& what) { throw ValidationError("explainer config: " + what); };
  if (!(c.tau_end > 0.0)) fail("tau_end must be > 0");
  if (!(c.tau_start >= c.tau_end)) fail("tau_start must be >= tau_end");
  if (!(c.lr > 0.0)) fail("lr must be > 0");
  if (c.hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.latent_dim < 1) fail("latent_dim must be >= 1");
  if (!(c.latent_kl_weight >= 0.0)) fail("latent_kl_weight must be >= 0");
  if (c.max_steps < 1) fail("max_steps must be >= 1");
  if (c.episodes_per_graph < 1) fail("episodes_per_graph must be >= 1");
  if (!(c.flow_reward_eps >= 0.0)) fail("flow_reward_eps must be >= 0");
  if (c.explain_k < 1) fail("explain_k must be >= 1");
  validate_constraint(c.constraint);
}

std::string explainer_config_to_json(const ExplainerConfig& c) {
  nlohmann::ordered_json j;
  j["family"] = to_string(c.family);
  j["constraint"] = {{"kind", to_string(c.constraint.kind)},     {"max_edges", c.constraint.max_edges},
                     {"sparsity", c.constraint.sparsity},        {"metric", to_string(c.constraint.metric)},
                     {"weight", c.constraint.weight},            {"prior", c.constraint.prior}};
  j["tau_start"] = c.tau_start;
  j["tau_end"] = c.tau_end;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["hidden_dim"] = c.hidden_dim;
  j["batch_size"] = c.batch_size;
  j["latent_dim"] = c.latent_dim;
  j["latent_kl_weight"] = c.latent_kl_weight;
  j["max_steps"] = c.max_steps;
  j["episodes_per_graph"] = c.episodes_per_graph;
  j["flow_reward_eps"] = c.flow_reward_eps;
  j["flow_rollouts"] = c.flow_rollouts;
  j["explain_k"] = c.explain_k;
  j["sample_at_inference"] = c.sample_at_inference;
  j["hard_samples"] = c.hard_samples;
  j["target_class"] = c.target_class;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

ExplainerConfig explainer_config_from_json(const std::string& text) {
  ExplainerConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ValidationError("explainer config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "family") {
        c.family = family_from_string(value.get<std::string>());
      } else if (key == "constraint") {
        for (const auto& [ck, cv] : value.items()) {
          if (ck == "kind") c.constraint.kind = constraint_kind_from_string(cv.get<std::string>());
          else if (ck == "max_edges") c.constraint.max_edges = cv.get<std::size_t>();
          else if (ck == "sparsity") c.constraint.sparsity = cv.get<double>();
          else if (ck == "metric") c.constraint.metric = size_metric_from_string(cv.get<std::string>());
          else if (ck == "weight") c.constraint.weight = cv.get<double>();
          else if (ck == "prior") c.constraint.prior = cv.get<double>();
          else throw ValidationError("explainer config: unknown constraint key '" + ck + "'");
        }
      } else if (key == "tau_start") c.tau_start = value.get<double>();
      else if (key == "tau_end") c.tau_end = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "latent_dim") c.latent_dim = value.get<std::size_t>();
      else if (key == "latent_kl_weight") c.latent_kl_weight = value.get<double>();
      else if (key == "max_steps") c.max_steps = value.get<std::size_t>();
      else if (key == "episodes_per_graph") c.episodes_per_graph = value.get<std::size_t>();
      else if (key == "flow_reward_eps") c.flow_reward_eps = value.get<double>();
      else if (key == "flow_rollouts") c.flow_rollouts = value.get<std::size_t>();
      else if (key == "explain_k") c.explain_k = value.get<std::size_t>();
      else if (key == "sample_at_inference") c.sample_at_inference = value.get<bool>();
      else if (key == "hard_samples") c.hard_samples = value.get<bool>();
      else if (key == "target_class") c.target_class = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw ValidationError("explainer config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("explainer config: ") + e.what());
  } catch (const UsageError& e) {
    throw ValidationError(e.what());
  }
  validate_explainer_config(c);
  return c;
}

std::vector<std::size_t> ExplanationMask::hard_indices() const {
  std::vector<std::size_t> out;
  if (!hard_edges) return out;
  for (std::size_t i = 0; i < hard_edges->size(); ++i) {
    if ((*hard_edges)[i] > 0.5) out.push_back(i);
  }
  return out;
}

ExplanationMask make_mask(std::vector<double> weights, std::size_t k, std::size_t target) {
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("explanation weights must lie in [0,1]");
  }
  ExplanationMask m;
  if (k >= 1) m.hard_edges = hard_size_select(weights, k);
  m.edge_weights = std::move(weights);
  m.target_label = target;
  return m;
}

std::unique_ptr<Explainer> restore_explainer(const ExplainerConfig& config, std::shared_ptr<const GnnModel> model,
                                             const ParameterSet& params) {
  validate_explainer_config(config);
  if (!model) throw ContractError("restore_explainer: no base model");
  const ParameterSet expected = expected_params(config, *model);
  if (expected.size() != params.size()) {
    throw ValidationError("explainer checkpoint: expected " + std::to_string(expected.size()) + " tensors for " +
                          to_string(config.family) + ", found " + std::to_string(params.size()));
  }
  for (const auto& [name, tensor] : expected) {
    if (!params.contains(name)) throw ValidationError("explainer checkpoint: missing tensor '" + name + "'");
    if (params.get(name).shape() != tensor.shape()) {
      throw ValidationError("explainer checkpoint: tensor '" + name + "' has shape " +
                            shape_string(params.get(name).shape()) + ", expected " + shape_string(tensor.shape()));
    }
  }
  switch (config.family) {
    case ExplainerFamily::kMaskGen:
      return std::make_unique<MaskGenExplainer>(config, model, params);
    case ExplainerFamily::kVgae:
      return std::make_unique<VgaeExplainer>(config, model, params);
    case ExplainerFamily::kRlMdp:
      return std::make_unique<PolicyAgent>(config, model, params);
    case ExplainerFamily::kFlowDag:
      return std::make_unique<FlowExplainer>(config, model, params);
    case ExplainerFamily::kCounterfactual:
      return std::make_unique<CounterfactualExplainer>(config, model, params);
    case ExplainerFamily::kModelLevel:
      return std::make_unique<ModelLevelExplainer>(config, model, params);
    case ExplainerFamily::kSaliency:
      return std::make_unique<SaliencyExplainer>(config, model);
    case ExplainerFamily::kRandom:
      return std::make_unique<RandomExplainer>(config, model);
  }
  throw ContractError("restore_explainer: unknown family");
}

TrainedExplainer train_explainer(std::shared_ptr<const GnnModel> model, const Dataset& dataset,
                                 const ExplainerConfig& config) {
  validate_explainer_config(config);
  switch (config.family) {
    case ExplainerFamily::kMaskGen:
      return train_maskgen(model, dataset, config);
    case ExplainerFamily::kVgae:
      return train_vgae(model, dataset, config);
    case ExplainerFamily::kRlMdp:
      return train_rl_mdp(model, dataset, config);
    case ExplainerFamily::kFlowDag:
      return train_flow_dag(model, dataset, config);
    case ExplainerFamily::kCounterfactual:
      return train_counterfactual(model, dataset, config);
    case ExplainerFamily::kModelLevel:
      return train_model_level(model, dataset, config);
    case ExplainerFamily::kSaliency:
      return {std::make_unique<SaliencyExplainer>(config, model), {}};
    case ExplainerFamily::kRandom:
      return {std::make_unique<RandomExplainer>(config, model), {}};
  }
  throw ContractError("train_explainer: unknown family");
}

std::string explanation_to_json(std::size_t graph_index, const Graph& graph, const ExplanationMask& mask,
                                const std::string& family, double wall_time_ms) {
  if (mask.edge_weights.size() != graph.num_edges()) {
    throw DimensionError("explanation has " + std::to_string(mask.edge_weights.size()) + " weights for " +
                         std::to_string(graph.num_edges()) + " edges");
  }
  nlohmann::ordered_json j;
  j["graph_index"] = graph_index;
  j["target_label"] = mask.target_label;
  j["edge_weights"] = mask.edge_weights;
  auto hard = nlohmann::ordered_json::array();
  for (std::size_t i : mask.hard_indices()) hard.push_back({graph.edges[i].u, graph.edges[i].v});
  j["hard_edges"] = hard;
  j["family"] = family;
  j["wall_time_ms"] = wall_time_ms;
  return j.dump() + "\n";
}

ExplanationRecord explanation_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ExplanationRecord r;
    r.graph_index = j.at("graph_index").get<std::size_t>();
    r.target_label = j.at("target_label").get<std::size_t>();
    r.edge_weights = j.at("edge_weights").get<std::vector<double>>();
    for (const auto& e : j.at("hard_edges")) {
      const auto pair = e.get<std::vector<std::size_t>>();
      if (pair.size() != 2) throw ValidationError("explanation: hard edge must be a pair");
      r.hard_edges.push_back(Edge::canonical(pair[0], pair[1]));
    }
    r.family = j.at("family").get<std::string>();
    r.wall_time_ms = j.at("wall_time_ms").get<double>();
    for (double w : r.edge_weights) {
      if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("explanation: edge weight outside [0,1]");
    }
    if (!(r.wall_time_ms >= 0.0)) throw ValidationError("explanation: negative wall time");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("explanation: ") + e.what());
  }
}

}  // namespace gnnx
