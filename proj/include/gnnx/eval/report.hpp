#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gnnx/eval/metrics.hpp"

namespace gnnx {

struct EvalReport {
  std::string family;
  std::string dataset;
  std::size_t k = 0;
  std::size_t max_edges = 20;  // sparsity filter applied before fidelity
  std::vector<std::uint64_t> seeds;
  std::vector<EvalRecord> records;  // unfiltered

  double kept_fraction = 1.0;
  double fidelity_acc = 0.0;
  double faithfulness = 1.0;
  double mean_inference_ms = 0.0;
  std::optional<double> inference_stderr_ms;
  std::optional<double> generalization_discrepancy;
  std::optional<double> generalization_stderr;
  std::optional<double> gt_auc;
  std::size_t gt_skipped = 0;
  // Oracle dominance checks, when run.
  std::optional<std::size_t> oracle_checked;
  std::optional<std::size_t> oracle_violations;
};

// Fills the aggregates from the records: fidelity over the records kept by
// the sparsity filter, faithfulness = 1 - fidelity, mean wall time over all
// records, seeds in order of first appearance.
EvalReport make_report(std::string family, std::string dataset, std::size_t k, std::vector<EvalRecord> records,
                       std::size_t max_edges = 20);

// Recomputes the record-derived aggregates and throws IntegrityError when any
// differs from the stored value.
void verify_report(const EvalReport& report);

// Header: graph_index,family,dataset,seed,initial_correct,explanation_correct,
// num_hard_edges,gt_jaccard,wall_time_ms. Reals are written round-trip exact.
std::string report_to_csv(const EvalReport& report);
// Aggregates plus a checksum of the CSV text.
std::string report_to_json(const EvalReport& report);

// Rebuilds a report from its JSON and CSV, checking the checksum and the
// aggregates (IntegrityError) and the formats (ParseError).
EvalReport report_from_files(const std::string& json_text, const std::string& csv_text);
// Aggregate-only view of a report JSON (records empty).
EvalReport report_summary_from_json(const std::string& json_text);

std::uint64_t fnv1a(const std::string& text);

}  // namespace gnnx
