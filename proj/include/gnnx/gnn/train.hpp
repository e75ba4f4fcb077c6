#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gnnx/gnn/model.hpp"

namespace gnnx {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  GnnModel model;  // best-validation-loss parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

// Cross-entropy with Adam over shuffled minibatches (one step per batch);
// early stop when validation loss has not improved for `patience` epochs.
TrainResult train_base(const Dataset& dataset, const GnnConfig& config, std::uint64_t seed);

// Fraction of graphs in the split whose prediction equals the label.
double accuracy(const GnnModel& model, const Dataset& dataset, Split split);

std::string history_to_csv(const std::vector<EpochRecord>& history);

}  // namespace gnnx
