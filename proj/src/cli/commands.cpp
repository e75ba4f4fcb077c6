#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "gnnx/cli/cli.hpp"
#include "gnnx/cli/svg.hpp"
#include "gnnx/error.hpp"
#include "gnnx/eval/metrics.hpp"
#include "gnnx/eval/oracle.hpp"
#include "gnnx/eval/report.hpp"
#include "gnnx/explain/model_level.hpp"
#include "gnnx/gnn/train.hpp"
#include "gnnx/graph/canonical.hpp"
#include "gnnx/graph/generators.hpp"
#include "gnnx/graph/io.hpp"
#include "gnnx/graph/split.hpp"
#include "gnnx/tensor/checkpoint.hpp"
#include "json.hpp"

namespace gnnx {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const UsageError*>(&error) || dynamic_cast<const ValidationError*>(&error) ||
      dynamic_cast<const ParseError*>(&error) || dynamic_cast<const DomainError*>(&error) ||
      dynamic_cast<const nlohmann::json::exception*>(&error)) {
    return 2;
  }
  if (dynamic_cast<const IntegrityError*>(&error)) return 3;
  if (dynamic_cast<const NumericalError*>(&error)) return 4;
  return 1;
}

namespace {

// ---- paths, config documents and hashes ----

class Paths {
 public:
  explicit Paths(fs::path root) : root_(std::move(root)) {}
  fs::path operator()(const std::string& p) const {
    const fs::path path(p);
    return path.is_relative() && !root_.empty() ? root_ / path : path;
  }

 private:
  fs::path root_;
};

// The run configuration document: {"dataset": {...}, "gnn": {...},
// "explainers": [...], "eval": {...}, "output_dir": "..."}; every section is
// optional.
Json load_run_config(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config " + path + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known{"dataset", "gnn", "explainers", "eval", "output_dir"};
    if (!known.count(key)) throw ValidationError("config " + path + ": unknown section '" + key + "'");
  }
  if (j.contains("eval")) {
    const Json& ev = j["eval"];
    if (!ev.contains("seeds") || !ev["seeds"].is_array() || ev["seeds"].empty()) {
      throw ValidationError("config " + path + ": eval.seeds must be an explicit non-empty list");
    }
    for (const Json& s : ev["seeds"]) {
      if (!s.is_number_unsigned()) throw ValidationError("config " + path + ": eval.seeds must be non-negative integers");
    }
  }
  if (j.contains("explainers") && !j["explainers"].is_array()) {
    throw ValidationError("config " + path + ": explainers must be a list");
  }
  return j;
}

Paths make_paths(const Json& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return Paths(env);
  if (config.contains("output_dir")) return Paths(config["output_dir"].get<std::string>());
  return Paths({});
}

void check_dataset_path(const Json& config, const Paths& paths) {
  if (config.contains("dataset") && config["dataset"].contains("path")) {
    const fs::path p = paths(config["dataset"]["path"].get<std::string>());
    if (!fs::exists(p)) throw ValidationError("config: dataset path " + p.string() + " does not exist");
  }
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string content_hash(const std::vector<fs::path>& files) {
  std::string all;
  for (const fs::path& f : files) {
    all += read_file(f);
    all.push_back('\0');
  }
  return hex(fnv1a(all));
}

std::string model_hash(const fs::path& model) { return content_hash({model, model.string() + ".json"}); }
std::string dataset_hash(const fs::path& data) { return content_hash({data}); }

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- gen-data ----

struct GenDataArgs {
  std::string generator, out, config;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  double unseen_fraction = 0.0;
  CLI::Option *generator_opt, *count_opt, *seed_opt, *unseen_opt;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  Json params{{"generator", "ba2motifs"}, {"count", 1000}, {"seed", 0}, {"unseen_fraction", 0.0}};
  if (config.contains("dataset")) {
    for (const auto& [k, v] : config["dataset"].items()) {
      if (!params.contains(k)) throw ValidationError("config: dataset." + k + " is not a generator parameter");
      params[k] = v;
    }
  }
  if (a.generator_opt->count()) params["generator"] = a.generator;
  if (a.count_opt->count()) params["count"] = a.count;
  if (a.seed_opt->count()) params["seed"] = a.seed;
  if (a.unseen_opt->count()) params["unseen_fraction"] = a.unseen_fraction;

  const std::string generator = params["generator"].get<std::string>();
  const std::size_t count = params["count"].get<std::size_t>();
  const std::uint64_t seed = params["seed"].get<std::uint64_t>();
  const double unseen = params["unseen_fraction"].get<double>();
  if (count == 0) throw UsageError("--count must be at least 1");
  if (!(unseen >= 0.0 && unseen < 1.0)) throw UsageError("--unseen-fraction must be in [0, 1)");

  Dataset ds;
  if (generator == "ba2motifs") {
    ds = gen_ba2motifs(count, seed);
  } else if (generator == "ba_multishapes") {
    ds = gen_ba_multishapes(count, seed);
  } else {
    throw UsageError("unknown generator '" + generator + "' (expected ba2motifs or ba_multishapes)");
  }
  ds = unseen > 0.0 ? split_seen_unseen(std::move(ds), unseen, {}, seed) : split_dataset(std::move(ds), {}, seed);

  const fs::path path = paths(a.out);
  write_file_atomic(path, dataset_to_json(ds));
  write_json(path.string() + ".resolved.json",
             Json{{"command", "gen-data"}, {"dataset", params}, {"output", path.string()}});

  const DatasetStats s = dataset_stats(ds);
  out << "dataset      " << ds.name << "\n"
      << "graphs       " << s.num_graphs << "\n"
      << "avg nodes    " << fixed(s.avg_nodes, 2) << "\n"
      << "avg edges    " << fixed(s.avg_edges, 2) << " (both directions)\n"
      << "avg degree   " << fixed(s.avg_degree, 2) << "\n"
      << "classes      " << s.num_classes << "\n"
      << "node feats   " << s.node_feature_dim << "\n"
      << "splits       train " << ds.indices(Split::kTrain).size() << ", val " << ds.indices(Split::kVal).size()
      << ", test " << ds.indices(Split::kTest).size() << ", unseen " << ds.indices(Split::kUnseen).size() << "\n"
      << "wrote " << path.string() << "\n";
  return 0;
}

// ---- train-gnn ----

struct TrainGnnArgs {
  std::string data, out, config, layer, readout;
  std::size_t layers = 3, hidden = 32, epochs = 200, patience = 20, batch_size = 64;
  double lr = 0.001;
  std::uint64_t seed = 0;
  CLI::Option *layer_opt, *layers_opt, *hidden_opt, *epochs_opt, *patience_opt, *batch_opt, *lr_opt, *readout_opt;
};

int cmd_train_gnn(const TrainGnnArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  check_dataset_path(config, paths);
  const fs::path data = paths(a.data);
  const Dataset ds = read_graphs(data);
  if (ds.graphs.empty()) throw ValidationError(data.string() + " holds no graphs");

  Json gnn = Json::parse(config_to_json(GnnConfig{}));
  if (config.contains("gnn")) {
    for (const auto& [k, v] : config["gnn"].items()) {
      if (!gnn.contains(k)) throw ValidationError("config: unknown gnn key '" + k + "'");
      gnn[k] = v;
    }
  }
  if (a.layer_opt->count()) gnn["layer_kind"] = a.layer;
  if (a.layers_opt->count()) gnn["num_layers"] = a.layers;
  if (a.hidden_opt->count()) gnn["hidden_dim"] = a.hidden;
  if (a.epochs_opt->count()) gnn["max_epochs"] = a.epochs;
  if (a.patience_opt->count()) gnn["patience"] = a.patience;
  if (a.batch_opt->count()) gnn["batch_size"] = a.batch_size;
  if (a.lr_opt->count()) gnn["lr"] = a.lr;
  if (a.readout_opt->count()) gnn["readout"] = a.readout;
  gnn["num_classes"] = ds.num_classes;
  gnn["node_feature_dim"] = ds.graphs.front().node_feature_dim();
  gnn["edge_feature_dim"] = ds.graphs.front().edge_feature_dim();
  const GnnConfig cfg = config_from_json(gnn.dump());

  const TrainResult r = train_base(ds, cfg, a.seed);
  for (const EpochRecord& e : r.history) {
    if (!std::isfinite(e.train_loss) || !std::isfinite(e.val_loss)) {
      throw NumericalError("training loss became non-finite at epoch " + std::to_string(e.epoch));
    }
  }
  const fs::path path = paths(a.out);
  save_model(r.model, path);
  write_file_atomic(path.string() + ".history.csv", history_to_csv(r.history));
  write_json(path.string() + ".resolved.json", Json{{"command", "train-gnn"},
                                                    {"data", data.string()},
                                                    {"dataset_hash", dataset_hash(data)},
                                                    {"seed", a.seed},
                                                    {"gnn", Json::parse(config_to_json(cfg))},
                                                    {"output", path.string()}});
  out << "epochs       " << r.history.size() << " (best " << r.best_epoch << ")\n";
  if (!ds.indices(Split::kVal).empty()) out << "val accuracy " << fixed(accuracy(r.model, ds, Split::kVal)) << "\n";
  if (!ds.indices(Split::kTest).empty()) out << "test accuracy " << fixed(accuracy(r.model, ds, Split::kTest)) << "\n";
  out << "wrote " << path.string() << "\n";
  return 0;
}

// ---- train-explainer ----

struct TrainExplainerArgs {
  std::string data, model, family, out, config, explainer_config;
  std::uint64_t seed = 0;
  std::size_t epochs = 0, k = 0, target_class = 0;
  double lr = 0.0;
  CLI::Option *family_opt, *seed_opt, *epochs_opt, *k_opt, *lr_opt, *target_opt;
};

ExplainerConfig resolve_explainer_config(const TrainExplainerArgs& a, const Json& config) {
  std::optional<Json> entry;
  if (!a.explainer_config.empty()) entry = read_json(a.explainer_config);
  if (!entry && config.contains("explainers")) {
    for (const Json& e : config["explainers"]) {
      if (!a.family_opt->count() || e.value("family", std::string()) == a.family) {
        entry = e;
        break;
      }
    }
    if (!entry) throw ValidationError("config: no explainer entry for family '" + a.family + "'");
  }
  std::string family = a.family;
  if (!a.family_opt->count()) {
    if (!entry || !entry->contains("family")) throw UsageError("--family is required");
    family = (*entry)["family"].get<std::string>();
  }
  Json j = Json::parse(explainer_config_to_json(default_explainer_config(family_from_string(family))));
  if (entry) {
    for (const auto& [k, v] : entry->items()) {
      if (k == "family" && v.get<std::string>() != family) {
        throw ValidationError("explainer config is for family '" + v.get<std::string>() + "', not '" + family + "'");
      }
      j[k] = v;
    }
  }
  if (a.seed_opt->count()) j["seed"] = a.seed;
  if (a.epochs_opt->count()) j["epochs"] = a.epochs;
  if (a.k_opt->count()) j["explain_k"] = a.k;
  if (a.lr_opt->count()) j["lr"] = a.lr;
  if (a.target_opt->count()) j["target_class"] = a.target_class;
  return explainer_config_from_json(j.dump());
}

int cmd_train_explainer(const TrainExplainerArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  check_dataset_path(config, paths);
  const fs::path data = paths(a.data), model_path = paths(a.model);
  const ExplainerConfig cfg = resolve_explainer_config(a, config);
  auto model = std::make_shared<const GnnModel>(load_model(model_path));
  const Dataset ds = read_graphs(data);

  const TrainedExplainer t = train_explainer(model, ds, cfg);
  Json log = Json::array();
  for (const TrainLogEntry& e : t.log) {
    for (double v : {e.total, e.attr, e.info, e.reward}) {
      if (!std::isfinite(v)) throw NumericalError("explainer loss became non-finite at epoch " + std::to_string(e.epoch));
    }
    log.push_back({{"epoch", e.epoch}, {"total", e.total}, {"attr", e.attr}, {"info", e.info}, {"reward", e.reward}});
  }

  const fs::path path = paths(a.out);
  save_parameters(t.explainer->parameters(), path);
  write_json(path.string() + ".json", Json{{"config", Json::parse(explainer_config_to_json(cfg))},
                                           {"model_hash", model_hash(model_path)},
                                           {"dataset_hash", dataset_hash(data)},
                                           {"train_log", log}});
  write_json(path.string() + ".resolved.json", Json{{"command", "train-explainer"},
                                                    {"data", data.string()},
                                                    {"model", model_path.string()},
                                                    {"explainer", Json::parse(explainer_config_to_json(cfg))},
                                                    {"output", path.string()}});

  if (cfg.family == ExplainerFamily::kModelLevel) {
    const auto& ml = static_cast<const ModelLevelExplainer&>(*t.explainer);
    const ModelLevelResult r = ml.summarize(ds, class_indices(ds, cfg.target_class), cfg.explain_k);
    Json edges = Json::array();
    for (const Edge& e : r.subgraph.edges) edges.push_back({e.u, e.v});
    Json rep_edges = Json::array();
    for (const Edge& e : r.representative_edges) rep_edges.push_back({e.u, e.v});
    const Prediction pred = model->predict(r.subgraph);
    write_json(path.string() + ".model_level.json", Json{{"target_class", r.target_class},
                                                         {"canonical", r.canonical},
                                                         {"support", r.support},
                                                         {"instances", r.instances},
                                                         {"representative", r.representative},
                                                         {"representative_edges", rep_edges},
                                                         {"num_nodes", r.subgraph.num_nodes},
                                                         {"edges", edges},
                                                         {"predicted_class", pred.label},
                                                         {"predicted_probs", pred.probs}});
    out << "model-level  class " << r.target_class << ": " << r.subgraph.num_nodes << " nodes, "
        << r.subgraph.num_edges() << " edges, support " << r.support << "/" << r.instances << ", predicted "
        << pred.label << "\n";
  }
  if (!t.log.empty()) {
    const TrainLogEntry& e = t.log.back();
    out << "epoch " << e.epoch << "  total " << fixed(e.total) << "  attr " << fixed(e.attr) << "  info "
        << fixed(e.info);
    if (cfg.family == ExplainerFamily::kRlMdp || cfg.family == ExplainerFamily::kFlowDag) {
      out << "  reward " << fixed(e.reward);
    }
    out << "\n";
  }
  out << "wrote " << path.string() << "\n";
  return 0;
}

// ---- explain ----

struct LoadedExplainer {
  ExplainerConfig config;
  std::unique_ptr<Explainer> explainer;
  std::string hash;
};

// Restores an explainer checkpoint after checking that it was trained
// against exactly these model and dataset files.
LoadedExplainer load_explainer(const fs::path& path, const fs::path& model_path, const fs::path& data_path,
                               std::shared_ptr<const GnnModel> model) {
  const Json side = read_json(path.string() + ".json");
  const std::string want_model = side.at("model_hash").get<std::string>();
  const std::string want_data = side.at("dataset_hash").get<std::string>();
  const std::string have_model = model_hash(model_path), have_data = dataset_hash(data_path);
  if (want_model != have_model) {
    throw IntegrityError("model hash mismatch: explainer " + path.string() + " was trained against " + want_model +
                         " but " + model_path.string() + " hashes to " + have_model);
  }
  if (want_data != have_data) {
    throw IntegrityError("dataset hash mismatch: explainer " + path.string() + " was trained against " + want_data +
                         " but " + data_path.string() + " hashes to " + have_data);
  }
  LoadedExplainer out;
  out.config = explainer_config_from_json(side.at("config").dump());
  out.explainer = restore_explainer(out.config, std::move(model), load_parameters(path));
  out.hash = content_hash({path, path.string() + ".json"});
  return out;
}

std::vector<std::size_t> split_indices(const Dataset& ds, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  return ds.indices(split_from_string(split));
}

bool is_explanation_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 6 && name[0] == 'g' && p.extension() == ".json";
}

struct ExplainArgs {
  std::string explainer, model, data, out, split = "test", config;
  std::size_t k = 0;
  CLI::Option* k_opt;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  const fs::path ckpt = paths(a.explainer), model_path = paths(a.model), data = paths(a.data), dir = paths(a.out);
  auto model = std::make_shared<const GnnModel>(load_model(model_path));
  const LoadedExplainer loaded = load_explainer(ckpt, model_path, data, model);
  const Dataset ds = read_graphs(data);
  std::size_t k = loaded.config.explain_k;
  if (config.contains("eval") && config["eval"].contains("k")) k = config["eval"]["k"].get<std::size_t>();
  if (a.k_opt->count()) k = a.k;
  const auto indices = split_indices(ds, a.split);
  if (indices.empty()) throw DomainError("split '" + a.split + "' of " + data.string() + " is empty");

  const auto records = explain_all(*loaded.explainer, ds, indices, k);
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (is_explanation_file(entry.path())) fs::remove(entry.path());
  }
  const std::string family = to_string(loaded.config.family);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ExplanationRecord& r = records[i];
    const ExplanationMask mask{r.edge_weights,
                               [&] {
                                 std::vector<double> hard(r.edge_weights.size(), 0.0);
                                 for (const Edge& e : r.hard_edges) hard[*ds.graphs[r.graph_index].find_edge(e)] = 1.0;
                                 return hard;
                               }(),
                               r.target_label};
    char name[32];
    std::snprintf(name, sizeof name, "g%06zu.json", r.graph_index);
    write_file_atomic(dir / name, explanation_to_json(r.graph_index, ds.graphs[r.graph_index], mask, family,
                                                      r.wall_time_ms) + "\n");
  }
  write_json(dir / "manifest.json", Json{{"family", family},
                                         {"seed", loaded.config.seed},
                                         {"k", k},
                                         {"split", a.split},
                                         {"count", records.size()},
                                         {"explainer", ckpt.string()},
                                         {"explainer_hash", loaded.hash},
                                         {"model_hash", model_hash(model_path)},
                                         {"dataset_hash", dataset_hash(data)}});
  write_json(dir / "resolved_config.json", Json{{"command", "explain"},
                                                {"explainer", ckpt.string()},
                                                {"model", model_path.string()},
                                                {"data", data.string()},
                                                {"split", a.split},
                                                {"k", k},
                                                {"output", dir.string()}});
  double total_ms = 0.0;
  for (const auto& r : records) total_ms += r.wall_time_ms;
  out << "explained    " << records.size() << " graphs (" << family << ", k=" << k << ")\n"
      << "mean time    " << fixed(total_ms / static_cast<double>(records.size())) << " ms\n"
      << "wrote " << dir.string() << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::vector<std::string> explanations;
  std::string model, data, out, config;
  std::size_t max_edges = 20, workers = 1;
  bool generalization = false, oracle = false;
  CLI::Option *max_edges_opt, *workers_opt;
};

struct ExplanationSet {
  fs::path dir;
  Json manifest;
  std::vector<ExplanationRecord> records;
};

ExplanationSet read_explanations(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("explanation directory " + dir.string() + " does not exist");
  ExplanationSet s;
  s.dir = dir;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (is_explanation_file(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw UsageError("explanation directory " + dir.string() + " holds no explanations");
  if (!fs::exists(dir / "manifest.json")) throw UsageError(dir.string() + " has no manifest.json");
  s.manifest = read_json(dir / "manifest.json");
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) s.records.push_back(explanation_from_json(read_file(f)));
  return s;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  const fs::path model_path = paths(a.model), data = paths(a.data), prefix = paths(a.out);
  std::size_t max_edges = 20, workers = 1;
  if (config.contains("eval")) {
    max_edges = config["eval"].value("max_edges", max_edges);
    workers = config["eval"].value("workers", workers);
  }
  if (a.max_edges_opt->count()) max_edges = a.max_edges;
  if (a.workers_opt->count()) workers = a.workers;
  if (workers == 0) throw UsageError("--workers must be at least 1");

  auto model = std::make_shared<const GnnModel>(load_model(model_path));
  const Dataset ds = read_graphs(data);
  const std::string have_model = model_hash(model_path), have_data = dataset_hash(data);

  std::vector<ExplanationSet> sets;
  for (const std::string& d : a.explanations) sets.push_back(read_explanations(paths(d)));
  const std::string family = sets.front().manifest.at("family").get<std::string>();
  const std::size_t k = sets.front().manifest.at("k").get<std::size_t>();
  std::vector<EvalRecord> records;
  std::vector<ExplanationRecord> all_explanations;
  std::map<std::uint64_t, std::vector<double>> times_by_seed;
  for (const ExplanationSet& s : sets) {
    const Json& m = s.manifest;
    if (m.at("model_hash").get<std::string>() != have_model) {
      throw IntegrityError("model hash mismatch: " + s.dir.string() + " was explained with " +
                           m.at("model_hash").get<std::string>() + " but " + model_path.string() + " hashes to " +
                           have_model);
    }
    if (m.at("dataset_hash").get<std::string>() != have_data) {
      throw IntegrityError("dataset hash mismatch: " + s.dir.string() + " was explained on " +
                           m.at("dataset_hash").get<std::string>() + " but " + data.string() + " hashes to " +
                           have_data);
    }
    if (m.at("family").get<std::string>() != family || m.at("k").get<std::size_t>() != k) {
      throw ValidationError("explanation sets mix families or k: " + s.dir.string());
    }
    const std::uint64_t seed = m.at("seed").get<std::uint64_t>();
    auto rs = evaluate_explanations(*model, ds, s.records, seed, workers);
    for (const EvalRecord& r : rs) times_by_seed[seed].push_back(r.wall_time_ms);
    records.insert(records.end(), rs.begin(), rs.end());
    all_explanations.insert(all_explanations.end(), s.records.begin(), s.records.end());
  }

  EvalReport report = make_report(family, ds.name.empty() ? data.stem().string() : ds.name, k, records, max_edges);
  const GroundTruthAgreement gt = ground_truth_agreement(ds, all_explanations);
  report.gt_auc = gt.auc;
  report.gt_skipped = gt.skipped;
  if (times_by_seed.size() > 1) {
    std::vector<double> means;
    for (const auto& [seed, ts] : times_by_seed) means.push_back(mean_stderr(ts).mean);
    report.inference_stderr_ms = mean_stderr(means).stderr_;
  }

  if (a.generalization) {
    const auto seen = ds.indices(Split::kTest), unseen = ds.indices(Split::kUnseen);
    if (unseen.empty()) throw DomainError("--generalization needs a dataset with an unseen split (gen-data --unseen-fraction)");
    std::vector<const Graph*> seen_graphs, unseen_graphs;
    for (std::size_t i : seen) seen_graphs.push_back(&ds.graphs[i]);
    for (std::size_t i : unseen) unseen_graphs.push_back(&ds.graphs[i]);
    std::vector<double> gaps;
    for (const ExplanationSet& s : sets) {
      const LoadedExplainer loaded =
          load_explainer(s.manifest.at("explainer").get<std::string>(), model_path, data, model);
      gaps.push_back(generalization_gap(*loaded.explainer, *model, seen_graphs, unseen_graphs, k));
    }
    const MeanStderr g = mean_stderr(gaps);
    report.generalization_discrepancy = g.mean;
    if (gaps.size() > 1) report.generalization_stderr = g.stderr_;
  }

  if (a.oracle) {
    std::size_t checked = 0, violations = 0;
    for (const ExplanationRecord& ex : all_explanations) {
      const Graph& g = ds.graphs[ex.graph_index];
      if (g.num_edges() == 0 || g.num_edges() > kOracleMaxEdges || ex.hard_edges.empty()) continue;
      std::vector<std::size_t> hard;
      for (const Edge& e : ex.hard_edges) hard.push_back(*g.find_edge(e));
      const OracleResult best = brute_force_best_subgraph(*model, g, k, ex.target_label);
      ++checked;
      violations += achieved_probability(*model, g, hard, ex.target_label) > best.probability;
    }
    report.oracle_checked = checked;
    report.oracle_violations = violations;
  }

  write_file_atomic(prefix.string() + ".csv", report_to_csv(report));
  write_file_atomic(prefix.string() + ".json", report_to_json(report));
  Json dirs = Json::array();
  for (const ExplanationSet& s : sets) dirs.push_back(s.dir.string());
  write_json(prefix.string() + ".resolved.json", Json{{"command", "evaluate"},
                                                      {"explanations", dirs},
                                                      {"model", model_path.string()},
                                                      {"data", data.string()},
                                                      {"max_edges", max_edges},
                                                      {"workers", workers},
                                                      {"generalization", a.generalization},
                                                      {"oracle", a.oracle},
                                                      {"output", prefix.string()}});

  out << "family       " << family << " (k=" << k << ", seeds " << report.seeds.size() << ")\n"
      << "records      " << report.records.size() << " (" << fixed(100.0 * report.kept_fraction, 1)
      << "% under " << max_edges << " edges)\n"
      << "fidelity_acc " << fixed(report.fidelity_acc) << "\n"
      << "faithfulness " << fixed(report.faithfulness) << "\n"
      << "mean time    " << fixed(report.mean_inference_ms) << " ms\n";
  if (report.gt_auc) out << "gt auc       " << fixed(*report.gt_auc) << "\n";
  if (report.generalization_discrepancy) out << "gen. gap     " << fixed(*report.generalization_discrepancy) << "\n";
  if (report.oracle_checked) {
    out << "oracle       " << *report.oracle_violations << " violations in " << *report.oracle_checked << " checks\n";
  }
  out << "wrote " << prefix.string() << ".csv and .json\n";
  return 0;
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out, config;
};

std::string summary_table(const std::vector<EvalReport>& reports) {
  std::ostringstream s;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-16s %3s %8s %8s %8s %11s %11s %16s %7s\n", "family", "dataset", "k",
                "faithful", "fid_acc", "kept", "mean_ms", "stderr_ms", "gen_gap", "gt_auc");
  s << line;
  for (const EvalReport& r : reports) {
    const std::string gap = r.generalization_discrepancy
                                ? fixed(*r.generalization_discrepancy) +
                                      (r.generalization_stderr ? " +/- " + fixed(*r.generalization_stderr) : "")
                                : "-";
    std::snprintf(line, sizeof line, "%-16s %-16s %3zu %8.4f %8.4f %8.4f %11.4f %11s %16s %7s\n", r.family.c_str(),
                  r.dataset.c_str(), r.k, r.faithfulness, r.fidelity_acc, r.kept_fraction, r.mean_inference_ms,
                  r.inference_stderr_ms ? fixed(*r.inference_stderr_ms).c_str() : "-", gap.c_str(),
                  r.gt_auc ? fixed(*r.gt_auc).c_str() : "-");
    s << line;
  }
  return s.str();
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const Json config = load_run_config(a.config);
  const Paths paths = make_paths(config);
  std::vector<EvalReport> reports;
  for (const std::string& p : a.reports) reports.push_back(report_summary_from_json(read_file(paths(p))));
  for (const EvalReport& r : reports) {
    if (r.dataset != reports.front().dataset) {
      throw ValidationError("cannot merge reports over different datasets: '" + reports.front().dataset + "' and '" +
                            r.dataset + "'");
    }
  }
  // Bars are labelled by family, numbered when a family repeats.
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> labels;
  for (const EvalReport& r : reports) {
    const std::size_t n = ++seen[r.family];
    labels.push_back(n == 1 ? r.family : r.family + " #" + std::to_string(n));
  }
  const std::string dataset = reports.front().dataset;
  BarChart faith{"Faithfulness on " + dataset, "faithfulness", {}, false};
  BarChart timing{"Inference time on " + dataset, "ms per explanation", {}, true};
  BarChart gap{"Generalization gap on " + dataset, "seen - unseen faithfulness", {}, false};
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EvalReport& r = reports[i];
    faith.bars.push_back({labels[i], r.faithfulness, std::nullopt});
    timing.bars.push_back({labels[i], r.mean_inference_ms, r.inference_stderr_ms});
    if (r.generalization_discrepancy) gap.bars.push_back({labels[i], *r.generalization_discrepancy, r.generalization_stderr});
  }
  const fs::path dir = paths(a.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "faithfulness.svg", render_bar_chart(faith));
  write_file_atomic(dir / "inference_time.svg", render_bar_chart(timing));
  if (!gap.bars.empty()) write_file_atomic(dir / "generalization.svg", render_bar_chart(gap));
  const std::string table = summary_table(reports);
  write_file_atomic(dir / "summary.txt", table);
  Json inputs = Json::array();
  for (const std::string& p : a.reports) inputs.push_back(paths(p).string());
  write_json(dir / "resolved_config.json", Json{{"command", "report"}, {"reports", inputs}, {"output", dir.string()}});
  out << table << "wrote " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generative explainers for graph neural networks"};
  app.name("gnnx");
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic motif dataset with splits");
  gen.generator_opt = gen_cmd->add_option("--dataset", gen.generator, "Generator: ba2motifs or ba_multishapes");
  gen.count_opt = gen_cmd->add_option("--count", gen.count, "Number of graphs");
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "Generator and split seed");
  gen.unseen_opt = gen_cmd->add_option("--unseen-fraction", gen.unseen_fraction,
                                       "Fraction held out as unseen for the generalization protocol");
  gen_cmd->add_option("--out", gen.out, "Dataset JSON to write")->required();
  gen_cmd->add_option("--config", gen.config, "Run configuration JSON");

  TrainGnnArgs tg;
  auto* tg_cmd = app.add_subcommand("train-gnn", "Train the base GNN");
  tg_cmd->add_option("--data", tg.data, "Dataset JSON")->required();
  tg_cmd->add_option("--out", tg.out, "Model checkpoint to write")->required();
  tg.layer_opt = tg_cmd->add_option("--layer", tg.layer, "Layer kind: gin or gcn");
  tg.layers_opt = tg_cmd->add_option("--layers", tg.layers, "Number of message passing layers");
  tg.hidden_opt = tg_cmd->add_option("--hidden", tg.hidden, "Hidden width");
  tg.epochs_opt = tg_cmd->add_option("--epochs", tg.epochs, "Maximum epochs");
  tg.patience_opt = tg_cmd->add_option("--patience", tg.patience, "Early stopping patience");
  tg.batch_opt = tg_cmd->add_option("--batch-size", tg.batch_size, "Minibatch size");
  tg.lr_opt = tg_cmd->add_option("--lr", tg.lr, "Adam learning rate");
  tg.readout_opt = tg_cmd->add_option("--readout", tg.readout, "Readout: max, mean or sum");
  tg_cmd->add_option("--seed", tg.seed, "Training seed");
  tg_cmd->add_option("--config", tg.config, "Run configuration JSON");

  TrainExplainerArgs te;
  auto* te_cmd = app.add_subcommand("train-explainer", "Train an explainer against a frozen base model");
  te_cmd->add_option("--data", te.data, "Dataset JSON")->required();
  te_cmd->add_option("--model", te.model, "Base model checkpoint")->required();
  te_cmd->add_option("--out", te.out, "Explainer checkpoint to write")->required();
  te.family_opt = te_cmd->add_option("--family", te.family,
                                     "maskgen, vgae, rl_mdp, flow_dag, counterfactual, model_level, saliency or random");
  te.seed_opt = te_cmd->add_option("--seed", te.seed, "Explainer seed");
  te.epochs_opt = te_cmd->add_option("--epochs", te.epochs, "Training epochs");
  te.k_opt = te_cmd->add_option("--k", te.k, "Explanation size K");
  te.lr_opt = te_cmd->add_option("--lr", te.lr, "Learning rate");
  te.target_opt = te_cmd->add_option("--target-class", te.target_class, "Class explained by model_level");
  te_cmd->add_option("--explainer-config", te.explainer_config, "Explainer configuration JSON");
  te_cmd->add_option("--config", te.config, "Run configuration JSON");

  ExplainArgs ex;
  auto* ex_cmd = app.add_subcommand("explain", "Explain graphs of a split with a trained explainer");
  ex_cmd->add_option("--explainer", ex.explainer, "Explainer checkpoint")->required();
  ex_cmd->add_option("--model", ex.model, "Base model checkpoint")->required();
  ex_cmd->add_option("--data", ex.data, "Dataset JSON")->required();
  ex_cmd->add_option("--out", ex.out, "Directory for explanation JSONs")->required();
  ex_cmd->add_option("--split", ex.split, "train, val, test, unseen or all");
  ex.k_opt = ex_cmd->add_option("--k", ex.k, "Explanation size K");
  ex_cmd->add_option("--config", ex.config, "Run configuration JSON");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score explanations and write a report");
  ev_cmd->add_option("--explanations", ev.explanations, "Explanation directories, one per seed")->required();
  ev_cmd->add_option("--model", ev.model, "Base model checkpoint")->required();
  ev_cmd->add_option("--data", ev.data, "Dataset JSON")->required();
  ev_cmd->add_option("--out", ev.out, "Report path prefix (.csv and .json are added)")->required();
  ev.max_edges_opt = ev_cmd->add_option("--max-edges", ev.max_edges, "Sparsity filter: keep explanations below this size");
  ev.workers_opt = ev_cmd->add_option("--workers", ev.workers, "Worker threads for metric computation");
  ev_cmd->add_flag("--generalization", ev.generalization, "Add the seen/unseen faithfulness gap");
  ev_cmd->add_flag("--oracle", ev.oracle, "Check explanations against the brute-force optimum on small graphs");
  ev_cmd->add_option("--config", ev.config, "Run configuration JSON");

  ReportArgs rp;
  auto* rp_cmd = app.add_subcommand("report", "Render SVG charts and a summary table from report JSONs");
  rp_cmd->add_option("--reports", rp.reports, "Report JSON files")->required();
  rp_cmd->add_option("--out", rp.out, "Output directory")->required();
  rp_cmd->add_option("--config", rp.config, "Run configuration JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (tg_cmd->parsed()) return cmd_train_gnn(tg, out);
    if (te_cmd->parsed()) return cmd_train_explainer(te, out);
    if (ex_cmd->parsed()) return cmd_explain(ex, out);
    if (ev_cmd->parsed()) return cmd_evaluate(ev, out);
    if (rp_cmd->parsed()) return cmd_report(rp, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 2;
}

}  // namespace gnnx
