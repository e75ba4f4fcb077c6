#include "gnnx/gnn/train.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "gnnx/error.hpp"
#include "gnnx/tensor/ops.hpp"
#include "gnnx/tensor/optim.hpp"

namespace gnnx {
namespace {

struct SplitBatch {
  GraphBatch batch;
  std::vector<std::size_t> labels;
};

SplitBatch batch_of(const Dataset& ds, const std::vector<std::size_t>& index) {
  std::vector<const Graph*> graphs;
  SplitBatch out;
  for (std::size_t i : index) {
    if (!ds.graphs[i].label) throw DomainError("graph " + std::to_string(i) + " has no label");
    graphs.push_back(&ds.graphs[i]);
    out.labels.push_back(*ds.graphs[i].label);
  }
  out.batch = make_batch(graphs);
  return out;
}

// Mean loss and accuracy of fixed parameters on a prepared batch.
std::pair<double, double> evaluate(const GnnConfig& config, const ParameterSet& params, const SplitBatch& data) {
  const Tensor logits = gnn_forward(config, params, data.batch).logits;
  const double loss = ops::cross_entropy(logits, data.labels).item();
  std::size_t correct = 0;
  const std::size_t c = config.num_classes;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    correct += prediction_from_logits(logits.data().subspan(i * c, c)).label == data.labels[i];
  }
  return {loss, static_cast<double>(correct) / static_cast<double>(data.labels.size())};
}

}  // namespace

TrainResult train_base(const Dataset& ds, const GnnConfig& config, std::uint64_t seed) {
  validate_config(config);
  const auto train_index = ds.indices(Split::kTrain);
  const auto val_index = ds.indices(Split::kVal);
  if (train_index.empty()) throw DomainError("train_base: empty train split");
  if (val_index.empty()) throw DomainError("train_base: empty validation split");
  std::set<std::size_t> classes;
  for (std::size_t i : train_index) {
    if (ds.graphs[i].label) classes.insert(*ds.graphs[i].label);
  }
  if (classes.size() < 2 && !config.allow_degenerate_labels) {
    throw DomainError("train_base: training split contains a single class");
  }
  for (std::size_t label : classes) {
    if (label >= config.num_classes) throw ValidationError("train_base: label exceeds num_classes");
  }

  Rng rng(seed);
  ParameterSet params = init_gnn_params(config, rng.next_u64());
  Adam adam({.lr = config.lr});
  const SplitBatch val = batch_of(ds, val_index);

  TrainResult result;
  ParameterSet best = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order = train_index;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::vector<std::size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(order.size(), start + config.batch_size)));
      const SplitBatch data = batch_of(ds, chunk);
      Tape tape;
      const ParameterSet tracked = params.track(tape);
      BatchStats stats;
      const Tensor loss =
          ops::cross_entropy(gnn_forward(config, tracked, data.batch, nullptr, &stats).logits, data.labels);
      auto grads = ParameterSet::gradients(tracked, tape.backward(loss));
      std::erase_if(grads, [](const auto& kv) { return is_running_stat(kv.first); });
      adam.step(params, grads);
      update_running_stats(params, stats);
      loss_sum += loss.item() * static_cast<double>(chunk.size());
    }
    const auto [val_loss, val_acc] = evaluate(config, params, val);
    result.history.push_back({epoch, loss_sum / static_cast<double>(order.size()), val_loss, val_acc});
    if (val_loss < best_val) {
      best_val = val_loss;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.model = GnnModel(config, best);
  return result;
}

double accuracy(const GnnModel& model, const Dataset& ds, Split split) {
  const auto index = ds.indices(split);
  if (index.empty()) throw DomainError("accuracy: split '" + to_string(split) + "' is empty");
  return evaluate(model.config(), model.params(), batch_of(ds, index)).second;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc << '\n';
  return out.str();
}

}  // namespace gnnx
