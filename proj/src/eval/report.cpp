#include "gnnx/eval/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gnnx/error.hpp"
#include "json.hpp"

namespace gnnx {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kCsvHeader =
    "graph_index,family,dataset,seed,initial_correct,explanation_correct,num_hard_edges,gt_jaccard,wall_time_ms";

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& field, const std::string& what) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("report CSV: bad " + what + " '" + field + "'");
  }
  return value;
}

bool parse_bool(const std::string& field, const std::string& what) {
  if (field == "1") return true;
  if (field == "0") return false;
  throw ParseError("report CSV: bad " + what + " '" + field + "'");
}

void check_name(const std::string& name, const char* what) {
  if (name.find_first_of(",\"\n\r") != std::string::npos) {
    throw ValidationError(std::string("report ") + what + " '" + name + "' contains a CSV delimiter");
  }
}

struct Aggregates {
  double kept_fraction, fidelity, faithfulness, mean_ms;
  std::vector<std::uint64_t> seeds;
};

Aggregates aggregate(const std::vector<EvalRecord>& records, std::size_t max_edges) {
  const SparsityFilterResult filtered = sparsity_filter(records, max_edges);
  if (filtered.kept.empty()) throw DomainError("report: no explanation passes the " + std::to_string(max_edges) + "-edge filter");
  Aggregates a;
  a.kept_fraction = filtered.kept_fraction;
  a.fidelity = fidelity_acc(filtered.kept);
  a.faithfulness = faithfulness_from_fidelity(a.fidelity);
  a.mean_ms = 0.0;
  for (const EvalRecord& r : records) a.mean_ms += r.wall_time_ms;
  a.mean_ms /= static_cast<double>(records.size());
  for (const EvalRecord& r : records) {
    if (std::find(a.seeds.begin(), a.seeds.end(), r.seed) == a.seeds.end()) a.seeds.push_back(r.seed);
  }
  return a;
}

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EvalReport make_report(std::string family, std::string dataset, std::size_t k, std::vector<EvalRecord> records,
                       std::size_t max_edges) {
  check_name(family, "family");
  check_name(dataset, "dataset");
  const Aggregates a = aggregate(records, max_edges);
  EvalReport r;
  r.family = std::move(family);
  r.dataset = std::move(dataset);
  r.k = k;
  r.max_edges = max_edges;
  r.records = std::move(records);
  r.kept_fraction = a.kept_fraction;
  r.fidelity_acc = a.fidelity;
  r.faithfulness = a.faithfulness;
  r.mean_inference_ms = a.mean_ms;
  r.seeds = a.seeds;
  return r;
}

void verify_report(const EvalReport& report) {
  if (report.faithfulness != 1.0 - report.fidelity_acc) {
    throw IntegrityError("report: faithfulness is not 1 - fidelity_acc");
  }
  const Aggregates a = aggregate(report.records, report.max_edges);
  auto mismatch = [](const char* what, double stored, double recomputed) {
    return IntegrityError(std::string("report: stored ") + what + " " + format_real(stored) +
                          " differs from the value recomputed from records, " + format_real(recomputed));
  };
  if (a.fidelity != report.fidelity_acc) throw mismatch("fidelity_acc", report.fidelity_acc, a.fidelity);
  if (a.faithfulness != report.faithfulness) throw mismatch("faithfulness", report.faithfulness, a.faithfulness);
  if (a.kept_fraction != report.kept_fraction) throw mismatch("kept_fraction", report.kept_fraction, a.kept_fraction);
  if (a.mean_ms != report.mean_inference_ms) throw mismatch("mean_inference_ms", report.mean_inference_ms, a.mean_ms);
  if (a.seeds != report.seeds) throw IntegrityError("report: stored seeds differ from the records");
}

std::string report_to_csv(const EvalReport& report) {
  check_name(report.family, "family");
  check_name(report.dataset, "dataset");
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const EvalRecord& r : report.records) {
    out << r.graph_index << ',' << report.family << ',' << report.dataset << ',' << r.seed << ','
        << (r.initial_correct ? 1 : 0) << ',' << (r.explanation_correct ? 1 : 0) << ',' << r.num_hard_edges << ','
        << (r.gt_jaccard ? format_real(*r.gt_jaccard) : "") << ',' << format_real(r.wall_time_ms) << '\n';
  }
  return out.str();
}

std::string report_to_json(const EvalReport& report) {
  Json j;
  j["family"] = report.family;
  j["dataset"] = report.dataset;
  j["k"] = report.k;
  j["max_edges"] = report.max_edges;
  j["seeds"] = report.seeds;
  j["num_records"] = report.records.size();
  j["kept_fraction"] = report.kept_fraction;
  j["fidelity_acc"] = report.fidelity_acc;
  j["faithfulness"] = report.faithfulness;
  j["mean_inference_ms"] = report.mean_inference_ms;
  put_optional(j, "inference_stderr_ms", report.inference_stderr_ms);
  put_optional(j, "generalization_discrepancy", report.generalization_discrepancy);
  put_optional(j, "generalization_stderr", report.generalization_stderr);
  put_optional(j, "gt_auc", report.gt_auc);
  j["gt_skipped"] = report.gt_skipped;
  put_optional(j, "oracle_checked", report.oracle_checked);
  put_optional(j, "oracle_violations", report.oracle_violations);
  j["records_checksum"] = fnv1a(report_to_csv(report));
  return j.dump(2) + "\n";
}

EvalReport report_summary_from_json(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  try {
    EvalReport r;
    r.family = j.at("family").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.max_edges = j.at("max_edges").get<std::size_t>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.kept_fraction = j.at("kept_fraction").get<double>();
    r.fidelity_acc = j.at("fidelity_acc").get<double>();
    r.faithfulness = j.at("faithfulness").get<double>();
    r.mean_inference_ms = j.at("mean_inference_ms").get<double>();
    r.inference_stderr_ms = get_optional<double>(j, "inference_stderr_ms");
    r.generalization_discrepancy = get_optional<double>(j, "generalization_discrepancy");
    r.generalization_stderr = get_optional<double>(j, "generalization_stderr");
    r.gt_auc = get_optional<double>(j, "gt_auc");
    r.gt_skipped = j.at("gt_skipped").get<std::size_t>();
    r.oracle_checked = get_optional<std::size_t>(j, "oracle_checked");
    r.oracle_violations = get_optional<std::size_t>(j, "oracle_violations");
    if (r.faithfulness != 1.0 - r.fidelity_acc) throw IntegrityError("report JSON: faithfulness is not 1 - fidelity_acc");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
}

EvalReport report_from_files(const std::string& json_text, const std::string& csv_text) {
  EvalReport r = report_summary_from_json(json_text);
  const Json j = Json::parse(json_text);
  const auto checksum = j.at("records_checksum").get<std::uint64_t>();
  if (fnv1a(csv_text) != checksum) throw IntegrityError("report: CSV checksum does not match the JSON");

  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("report CSV: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 9) throw ParseError("report CSV: line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    if (f[1] != r.family || f[2] != r.dataset) throw IntegrityError("report CSV: line " + std::to_string(line_no) + " names another family or dataset");
    EvalRecord rec;
    rec.graph_index = parse_number<std::size_t>(f[0], "graph_index");
    rec.seed = parse_number<std::uint64_t>(f[3], "seed");
    rec.initial_correct = parse_bool(f[4], "initial_correct");
    rec.explanation_correct = parse_bool(f[5], "explanation_correct");
    rec.num_hard_edges = parse_number<std::size_t>(f[6], "num_hard_edges");
    if (!f[7].empty()) rec.gt_jaccard = parse_number<double>(f[7], "gt_jaccard");
    rec.wall_time_ms = parse_number<double>(f[8], "wall_time_ms");
    if (rec.wall_time_ms < 0.0) throw ParseError("report CSV: negative wall time on line " + std::to_string(line_no));
    r.records.push_back(rec);
  }
  if (r.records.size() != j.at("num_records").get<std::size_t>()) throw IntegrityError("report: record count mismatch");
  verify_report(r);
  return r;
}

}  // namespace gnnx
