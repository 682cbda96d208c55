#include "rssh/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "rssh/error.hpp"
#include "rssh/eval.hpp"
#include "rssh/index.hpp"
#include "rssh/io.hpp"
#include "rssh/linalg.hpp"
#include "rssh/parallel.hpp"
#include "rssh/query.hpp"

namespace rssh::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kEmptyModel:
    case ErrorCode::kMissingLabel:
    case ErrorCode::kUndefinedMetric:
      return kBadArgs;
    case ErrorCode::kIo:
    case ErrorCode::kMalformedFile:
    case ErrorCode::kDimensionInconsistency:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionUnsupported:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kChecksumMismatch:
      return kIoError;
    case ErrorCode::kZeroMatrix:
    case ErrorCode::kRankTooLarge:
    case ErrorCode::kNonConvergence:
    case ErrorCode::kNonFinite:
    case ErrorCode::kRejectionTimeout:
    case ErrorCode::kInvariantViolation:
      return kNumericFailure;
  }
  return kNumericFailure;
}

// One JSON object per line in --jsonl mode, nothing otherwise.
class Records {
 public:
  Records(std::ostream& out, const bool& enabled) : out_(out), enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void emit(const json& record) const {
    if (enabled_) out_ << record.dump() << '\n';
  }

 private:
  std::ostream& out_;
  const bool& enabled_;
};

struct DatasetFlags {
  std::string path;
  std::string format = "auto";
  std::size_t limit = 0;
  std::string labels;
  bool csv_header = false;
  bool csv_labels = false;

  DatasetDescriptor descriptor() const {
    DatasetDescriptor desc;
    desc.path = path;
    if (format == "auto") desc.format = detect_format(path);
    else if (format == "idx") desc.format = DatasetFormat::kIdx;
    else if (format == "fvecs") desc.format = DatasetFormat::kFvecs;
    else desc.format = DatasetFormat::kCsv;
    if (limit > 0) desc.limit = limit;
    if (!labels.empty()) desc.label_path = fs::path(labels);
    desc.csv_header = csv_header;
    desc.csv_label_column = csv_labels;
    return desc;
  }
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags, const std::string& name, bool required) {
  auto* path = cmd->add_option("--" + name, flags.path, name + " file (idx, fvecs or csv)");
  if (required) path->required();
  cmd->add_option("--" + name + "-format", flags.format, "format of --" + name)
      ->check(CLI::IsMember({"auto", "idx", "fvecs", "csv"}));
  cmd->add_option("--" + name + "-limit", flags.limit, "keep only the first N points of --" + name);
  cmd->add_option("--" + name + "-labels", flags.labels, "IDX label file for --" + name);
  cmd->add_flag("--" + name + "-csv-header", flags.csv_header, "--" + name + " CSV has a header row");
  cmd->add_flag("--" + name + "-csv-labels", flags.csv_labels, "--" + name + " CSV ends with an integer label column");
}

// --------------------------------------------------------------------------
// build

struct BuildFlags {
  DatasetFlags data;
  Index k = 8;
  double epsilon = 0.5;
  double eta = 0.1;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_levels = 0;
  int krylov_depth = 0;
  std::string out;
};

int cmd_build(const BuildFlags& flags, const Records& records, std::ostream& out) {
  const Dataset dataset = load_dataset(flags.data.descriptor());
  const PointSet& points = dataset.points;

  BuildParams params;
  params.k = flags.k;
  params.epsilon = flags.epsilon;
  params.eta = flags.eta;
  if (flags.alpha > 0.0) params.alpha = flags.alpha;
  params.seed = flags.seed;
  if (flags.max_levels > 0) params.max_levels = flags.max_levels;
  if (flags.krylov_depth > 0) params.krylov_depth = flags.krylov_depth;

  const auto start = std::chrono::steady_clock::now();
  const IndexModel model = build_partition_index(points, params);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  validate_partition(model, points);
  save_index(model, flags.out);

  if (!records.enabled()) {
    fmt::print(out, "dataset: {} points, {} dims\n", points.size(), points.dim());
    fmt::print(out, "{:>5}  {:>8}  {:>9}  {:>8}  {:>12}  {:<15}  {:>12}\n", "level", "captured", "remaining",
               "fraction", "threshold", "mode", "residual");
  }
  std::size_t remaining = static_cast<std::size_t>(points.size());
  for (const PartitionLevel& level : model.levels) {
    std::vector<Index> rows;
    for (const PointId id : level.member_ids) rows.push_back(points.row_of(id));
    const double residual = subspace_distances(points.subset(rows).points(), level.basis).maxCoeff();
    const double fraction = static_cast<double>(level.member_ids.size()) / static_cast<double>(remaining);
    records.emit({{"record", "level"},
                  {"level", level.level_id},
                  {"captured", level.member_ids.size()},
                  {"remaining_before", remaining},
                  {"fraction", fraction},
                  {"threshold", level.threshold_used},
                  {"capture_mode", to_string(level.capture_mode)},
                  {"rank", level.basis.rank()},
                  {"residual", residual}});
    if (!records.enabled()) {
      fmt::print(out, "{:>5}  {:>8}  {:>9}  {:>8.4f}  {:>12.6g}  {:<15}  {:>12.6g}\n", level.level_id,
                 level.member_ids.size(), remaining, fraction, level.threshold_used, to_string(level.capture_mode),
                 residual);
    }
    remaining -= level.member_ids.size();
  }
  const std::size_t bound = level_count_bound(static_cast<std::size_t>(points.size()));
  records.emit({{"record", "build"},
                {"points", points.size()},
                {"dims", points.dim()},
                {"levels", model.levels.size()},
                {"level_bound", bound},
                {"k", params.k},
                {"epsilon", params.epsilon},
                {"eta", params.eta},
                {"alpha", params.resolved_alpha()},
                {"seed", params.seed},
                {"build_seconds", seconds},
                {"index", flags.out}});
  if (!records.enabled()) {
    fmt::print(out, "levels: {} (bound {})  build time: {:.3f} s\n", model.levels.size(), bound, seconds);
    fmt::print(out, "index written to {}\n", flags.out);
  }
  return kOk;
}

// --------------------------------------------------------------------------
// query

struct QueryFlags {
  std::string index;
  DatasetFlags data;
  DatasetFlags queries;
  std::string probes = "1";
  std::size_t top_k = 1;
  std::string metric = "projected";
};

QueryParams query_params(const std::string& probes, const std::string& metric, const IndexModel& model) {
  QueryParams params;
  if (probes == "all") {
    params.probes = model.levels.size();
  } else {
    try {
      params.probes = std::stoul(probes);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidParams, "--probes must be a positive integer or 'all'");
    }
  }
  if (params.probes < 1) throw Error(ErrorCode::kInvalidParams, "--probes must be at least 1");
  params.metric = metric == "original" ? MetricSpace::kOriginal : MetricSpace::kProjected;
  return params;
}

void require_same_dim(const PointSet& queries, const IndexModel& model) {
  if (queries.dim() != model.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "queries have dimension " + std::to_string(queries.dim()) +
                                                   ", index has " + std::to_string(model.dim));
  }
}

json level_json(const QueryResult& r) { return r.level_id ? json(*r.level_id) : json(nullptr); }

int cmd_query(const QueryFlags& flags, const Records& records, std::ostream& out) {
  const IndexModel model = load_index(flags.index);
  const Dataset data = load_dataset(flags.data.descriptor());
  const Dataset queries = load_dataset(flags.queries.descriptor());
  require_same_dim(queries.points, model);
  const QueryParams params = query_params(flags.probes, flags.metric, model);

  const Searcher searcher(model, data.points);
  const auto results = searcher.batch_top_k(queries.points.points(), flags.top_k, params);
  if (!records.enabled()) {
    fmt::print(out, "{:>6}  {:>4}  {:>10}  {:>14}  {:>14}  {:>5}\n", "query", "rank", "point", "projected",
               "original", "level");
  }
  for (std::size_t q = 0; q < results.size(); ++q) {
    for (std::size_t rank = 0; rank < results[q].size(); ++rank) {
      const QueryResult& r = results[q][rank];
      records.emit({{"record", "result"},
                    {"query", q},
                    {"rank", rank},
                    {"point_id", r.point_id},
                    {"projected_distance", r.projected_distance},
                    {"original_distance", r.original_distance},
                    {"level", level_json(r)},
                    {"candidates", r.candidates_examined}});
      if (!records.enabled()) {
        fmt::print(out, "{:>6}  {:>4}  {:>10}  {:>14.8g}  {:>14.8g}  {:>5}\n", q, rank, r.point_id,
                   r.projected_distance, r.original_distance, r.level_id ? std::to_string(*r.level_id) : "-");
      }
    }
  }
  return kOk;
}

// --------------------------------------------------------------------------
// eval

struct EvalFlags {
  std::string index;
  DatasetFlags data;
  DatasetFlags queries;
  std::string ground_truth = "brute";
  std::string manifest;
  std::vector<std::size_t> k_list{1, 10, 25};
  std::string probes = "1";
  std::string metric = "projected";
  std::string table_out;
};

int cmd_eval(const EvalFlags& flags, const Records& records, std::ostream& out) {
  const IndexModel model = load_index(flags.index);
  const Dataset data = load_dataset(flags.data.descriptor());
  const Dataset queries = load_dataset(flags.queries.descriptor());
  require_same_dim(queries.points, model);
  const QueryParams params = query_params(flags.probes, flags.metric, model);
  if (flags.k_list.empty()) throw Error(ErrorCode::kInvalidParams, "--k-list is empty");
  for (const std::size_t k : flags.k_list) {
    if (k < 1) throw Error(ErrorCode::kInvalidParams, "--k-list entries must be >= 1");
  }
  const std::size_t max_k = *std::max_element(flags.k_list.begin(), flags.k_list.end());

  std::optional<PointId> planted;
  if (flags.ground_truth == "planted") {
    if (flags.manifest.empty()) throw Error(ErrorCode::kInvalidParams, "--ground-truth planted needs --manifest");
    std::ifstream in(flags.manifest);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + flags.manifest);
    planted = json::parse(in).at("planted_id").get<PointId>();
  }

  std::unordered_map<PointId, std::size_t> level_of;
  for (const PartitionLevel& level : model.levels) {
    for (const PointId id : level.member_ids) level_of.emplace(id, level.level_id);
  }

  const Searcher searcher(model, data.points);
  const DenseMatrix& qs = queries.points.points();
  const auto results = searcher.batch_top_k(qs, max_k, params);
  std::vector<std::vector<QueryResult>> truth(results.size());
  std::vector<std::size_t> routed(results.size());
  parallel_for(results.size(), [&](std::size_t q) {
    truth[q] = brute_force_top_k(qs.row(static_cast<Index>(q)).transpose(), data.points, max_k);
    routed[q] = nearest_subspace(qs.row(static_cast<Index>(q)).transpose(), model).front();
  });

  const auto n_queries = static_cast<double>(results.size());
  std::vector<double> recall(flags.k_list.size(), 0.0);
  std::size_t routing_failures = 0;
  std::size_t planted_hits = 0;
  double candidates = 0.0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    std::vector<PointId> got;
    std::vector<PointId> want;
    for (const QueryResult& r : results[q]) got.push_back(r.point_id);
    for (const QueryResult& r : truth[q]) want.push_back(r.point_id);
    for (std::size_t i = 0; i < flags.k_list.size(); ++i) recall[i] += recall_at_k(got, want, flags.k_list[i]);
    const PointId nearest = planted.value_or(want.front());
    if (level_of.at(nearest) != routed[q]) ++routing_failures;
    if (planted && !got.empty() && got.front() == *planted) ++planted_hits;
    candidates += static_cast<double>(results[q].front().candidates_examined);
  }
  for (double& r : recall) r /= n_queries;

  json summary = {{"record", "eval"},
                  {"queries", results.size()},
                  {"rank", model.params.k},
                  {"levels", model.levels.size()},
                  {"probes", params.probes},
                  {"routing_failure_rate", static_cast<double>(routing_failures) / n_queries},
                  {"mean_candidates", candidates / n_queries}};
  for (std::size_t i = 0; i < flags.k_list.size(); ++i) {
    summary["recall@" + std::to_string(flags.k_list[i])] = recall[i];
  }
  if (planted) summary["planted_hit_rate"] = static_cast<double>(planted_hits) / n_queries;

  std::optional<ClassificationReport> report;
  if (data.labels && queries.labels) {
    report = classify_by_nn(queries.points, *queries.labels, model, data.points, *data.labels, params);
    summary["accuracy"] = report->overall_accuracy();
    json per_class = json::object();
    for (const auto& [label, counts] : report->per_class) {
      json entry = {{"tp", counts.tp}, {"tn", counts.tn}, {"fp", counts.fp}, {"fn", counts.fn}};
      if (counts.tp + counts.fp > 0) entry["precision"] = precision(counts);
      per_class[std::to_string(label)] = entry;
    }
    summary["per_class"] = per_class;
  }

  if (!flags.table_out.empty()) {
    const bool fresh = !fs::exists(flags.table_out);
    std::ofstream table(flags.table_out, std::ios::app);
    if (!table) throw Error(ErrorCode::kIo, "cannot open " + flags.table_out);
    if (fresh) table << "rank\tK\trecall\tprobes\n";
    for (std::size_t i = 0; i < flags.k_list.size(); ++i) {
      table << model.params.k << '\t' << flags.k_list[i] << '\t' << recall[i] << '\t' << params.probes << '\n';
    }
  }

  if (records.enabled()) {
    records.emit(summary);
    return kOk;
  }
  fmt::print(out, "queries: {}  levels: {}  probes: {}  rank: {}\n", results.size(), model.levels.size(),
             params.probes, model.params.k);
  for (std::size_t i = 0; i < flags.k_list.size(); ++i) {
    fmt::print(out, "recall@{:<4} {:.4f}\n", flags.k_list[i], recall[i]);
  }
  fmt::print(out, "routing failure rate: {:.4f}\n", static_cast<double>(routing_failures) / n_queries);
  fmt::print(out, "mean candidates examined: {:.1f}\n", candidates / n_queries);
  if (planted) fmt::print(out, "planted hit rate: {:.4f}\n", static_cast<double>(planted_hits) / n_queries);
  if (report) {
    fmt::print(out, "accuracy: {:.4f}\n", report->overall_accuracy());
    fmt::print(out, "{:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>9}\n", "class", "tp", "tn", "fp", "fn", "precision");
    for (const auto& [label, c] : report->per_class) {
      const std::string p = c.tp + c.fp > 0 ? fmt::format("{:.4f}", precision(c)) : "n/a";
      fmt::print(out, "{:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>9}\n", label, c.tp, c.tn, c.fp, c.fn, p);
    }
  }
  return kOk;
}

// --------------------------------------------------------------------------
// synth

struct SynthFlags {
  Index n = 256;
  Index d = 32;
  Index k = 8;
  double epsilon = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthFlags& flags, const Records& records, std::ostream& out) {
  const PlantedInstance instance = generate_planted_instance(flags.n, flags.d, flags.k, flags.epsilon, flags.seed);
  check_planted_instance(instance);
  const fs::path dir(flags.out);
  fs::create_directories(dir);
  write_csv(dir / "data.csv", instance.data);
  write_csv(dir / "clean.csv", instance.clean_data);
  DenseMatrix query_row = instance.query.transpose();
  write_csv(dir / "query.csv", PointSet(std::move(query_row)));

  const json manifest = {{"n", flags.n},
                         {"d", flags.d},
                         {"k", flags.k},
                         {"epsilon", flags.epsilon},
                         {"alpha", instance.alpha},
                         {"seed", flags.seed},
                         {"planted_id", instance.planted_id},
                         {"query_noise_norm", instance.query_noise_norm},
                         {"max_noise_norm", *std::max_element(instance.noise_norms.begin(), instance.noise_norms.end())},
                         {"data", "data.csv"},
                         {"clean", "clean.csv"},
                         {"query", "query.csv"}};
  std::ofstream file(dir / "manifest.json");
  if (!file) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
  file << manifest.dump(2) << '\n';

  records.emit({{"record", "synth"}, {"dir", dir.string()}, {"planted_id", instance.planted_id}});
  if (!records.enabled()) {
    fmt::print(out, "wrote {} points (d={}, k={}, epsilon={}) to {}; planted id {}\n", flags.n, flags.d, flags.k,
               flags.epsilon, dir.string(), instance.planted_id);
  }
  return kOk;
}

// --------------------------------------------------------------------------
// svd-check

struct SvdCheckFlags {
  std::size_t trials = 50;
  Index n = 100;
  Index d = 30;
  Index k = 5;
  double eta = 0.1;
  std::uint64_t seed = 0;
  int depth = 0;
};

struct TrialOutcome {
  double residual = 0.0;
  double spectral_bound = 0.0;
  double max_deviation = 0.0;
  double deviation_bound = 0.0;
  bool spectral_pass = false;
  bool per_vector_pass = false;
};

DenseMatrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  if (cols <= rows) return gaussian_sketch(rows, cols, seed);
  return gaussian_sketch(cols, rows, seed).transpose();
}

int cmd_svd_check(const SvdCheckFlags& flags, const Records& records, std::ostream& out) {
  if (flags.trials < 1) throw Error(ErrorCode::kInvalidParams, "--trials must be at least 1");
  if (flags.k >= std::min(flags.n, flags.d)) {
    throw Error(ErrorCode::kInvalidParams, "svd-check needs k < min(n, d) so that sigma_{k+1} exists");
  }
  std::vector<TrialOutcome> outcomes(flags.trials);
  parallel_for(flags.trials, [&](std::size_t t) {
    const DenseMatrix a = random_matrix(flags.n, flags.d, flags.seed + t);
    KrylovParams params = make_krylov_params(flags.k, flags.eta, flags.n, flags.seed + 1000003 * (t + 1));
    if (flags.depth > 0) params.depth = flags.depth;
    const SubspaceBasis basis = block_lanczos(a, params);
    const std::vector<double> sigma = exact_singular_values(a);
    const double next = sigma[static_cast<std::size_t>(flags.k)];
    TrialOutcome& o = outcomes[t];
    o.residual = exact_singular_values(projection_residual(a, basis)).front();
    o.spectral_bound = (1.0 + flags.eta) * next;
    o.deviation_bound = flags.eta * next * next;
    for (Index i = 0; i < flags.k; ++i) {
      const double approx = basis.singular_values[static_cast<std::size_t>(i)];
      const double exact = sigma[static_cast<std::size_t>(i)];
      o.max_deviation = std::max(o.max_deviation, std::abs(approx * approx - exact * exact));
    }
    o.spectral_pass = o.residual <= o.spectral_bound;
    o.per_vector_pass = o.max_deviation <= o.deviation_bound;
  });

  std::size_t spectral_passes = 0;
  std::size_t vector_passes = 0;
  if (!records.enabled()) {
    fmt::print(out, "{:>5}  {:>12}  {:>12}  {:>8}  {:>12}  {:>12}  {:>8}\n", "trial", "residual", "bound", "spectral",
               "max|ds^2|", "eta*s^2", "pervec");
  }
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const TrialOutcome& o = outcomes[t];
    spectral_passes += o.spectral_pass;
    vector_passes += o.per_vector_pass;
    records.emit({{"record", "trial"},
                  {"trial", t},
                  {"residual", o.residual},
                  {"spectral_bound", o.spectral_bound},
                  {"spectral_pass", o.spectral_pass},
                  {"max_deviation", o.max_deviation},
                  {"deviation_bound", o.deviation_bound},
                  {"per_vector_pass", o.per_vector_pass}});
    if (!records.enabled()) {
      fmt::print(out, "{:>5}  {:>12.6g}  {:>12.6g}  {:>8}  {:>12.6g}  {:>12.6g}  {:>8}\n", t, o.residual,
                 o.spectral_bound, o.spectral_pass ? "pass" : "FAIL", o.max_deviation, o.deviation_bound,
                 o.per_vector_pass ? "pass" : "FAIL");
    }
  }
  // Required pass count for "probability at least 9/10".
  const auto required = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(flags.trials)));
  const bool ok = spectral_passes >= required && vector_passes >= required;
  records.emit({{"record", "summary"},
                {"trials", flags.trials},
                {"spectral_passes", spectral_passes},
                {"per_vector_passes", vector_passes},
                {"required", required},
                {"pass", ok}});
  if (!records.enabled()) {
    fmt::print(out, "spectral bound: {}/{} passed, per-vector bound: {}/{} passed (need {}) -> {}\n",
               spectral_passes, flags.trials, vector_passes, flags.trials, required, ok ? "PASS" : "FAIL");
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nearest-neighbor search over randomized low-rank subspace partitions"};
  app.name("rssh");
  app.require_subcommand(1);
  bool jsonl = false;
  app.add_flag("--jsonl", jsonl, "emit one JSON record per line instead of tables");
  const Records records(out, jsonl);
  std::function<int()> action;

  BuildFlags build;
  auto* build_cmd = app.add_subcommand("build", "build an index from a dataset");
  add_dataset_flags(build_cmd, build.data, "data", true);
  build_cmd->add_option("--k", build.k, "subspace rank per level")->check(CLI::PositiveNumber);
  build_cmd->add_option("--epsilon", build.epsilon, "separation parameter in (0, 1)");
  build_cmd->add_option("--eta", build.eta, "Krylov error parameter in (0, 1)");
  build_cmd->add_option("--alpha", build.alpha, "noise bound (default epsilon / 25)");
  build_cmd->add_option("--seed", build.seed, "random seed");
  build_cmd->add_option("--max-levels", build.max_levels, "level cap (default ceil(log2 n) + 1)");
  build_cmd->add_option("--krylov-depth", build.krylov_depth, "Krylov depth override");
  build_cmd->add_option("--out", build.out, "index output path")->required();
  build_cmd->callback([&] { action = [&] { return cmd_build(build, records, out); }; });

  QueryFlags query;
  auto* query_cmd = app.add_subcommand("query", "answer nearest-neighbor queries");
  query_cmd->add_option("--index", query.index, "index file")->required();
  add_dataset_flags(query_cmd, query.data, "data", true);
  add_dataset_flags(query_cmd, query.queries, "queries", true);
  query_cmd->add_option("--probes", query.probes, "levels to search, or 'all'");
  query_cmd->add_option("--top-k", query.top_k, "results per query")->check(CLI::PositiveNumber);
  query_cmd->add_option("--metric", query.metric, "ranking metric")->check(CLI::IsMember({"projected", "original"}));
  query_cmd->callback([&] { action = [&] { return cmd_query(query, records, out); }; });

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "measure recall, routing and classification quality");
  eval_cmd->add_option("--index", eval.index, "index file")->required();
  add_dataset_flags(eval_cmd, eval.data, "data", true);
  add_dataset_flags(eval_cmd, eval.queries, "queries", true);
  eval_cmd->add_option("--ground-truth", eval.ground_truth, "brute or planted")
      ->check(CLI::IsMember({"brute", "planted"}));
  eval_cmd->add_option("--manifest", eval.manifest, "synth manifest (for --ground-truth planted)");
  eval_cmd->add_option("--k-list", eval.k_list, "recall cutoffs")->delimiter(',');
  eval_cmd->add_option("--probes", eval.probes, "levels to search, or 'all'");
  eval_cmd->add_option("--metric", eval.metric, "ranking metric")->check(CLI::IsMember({"projected", "original"}));
  eval_cmd->add_option("--table-out", eval.table_out, "append rank/K/recall rows to this file");
  eval_cmd->callback([&] { action = [&] { return cmd_eval(eval, records, out); }; });

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a planted instance");
  synth_cmd->add_option("--n", synth.n, "points");
  synth_cmd->add_option("--d", synth.d, "ambient dimension");
  synth_cmd->add_option("--k", synth.k, "subspace dimension");
  synth_cmd->add_option("--epsilon", synth.epsilon, "separation parameter in (0, 1)");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->callback([&] { action = [&] { return cmd_synth(synth, records, out); }; });

  SvdCheckFlags svd;
  auto* svd_cmd = app.add_subcommand("svd-check", "check block Lanczos error bounds against an exact SVD");
  svd_cmd->add_option("--trials", svd.trials, "number of random matrices");
  svd_cmd->add_option("--n", svd.n, "rows");
  svd_cmd->add_option("--d", svd.d, "columns");
  svd_cmd->add_option("--k", svd.k, "rank");
  svd_cmd->add_option("--eta", svd.eta, "error parameter in (0, 1)");
  svd_cmd->add_option("--seed", svd.seed, "random seed");
  svd_cmd->add_option("--depth", svd.depth, "Krylov depth override");
  svd_cmd->callback([&] { action = [&] { return cmd_svd_check(svd, records, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadArgs;
  }
  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"rssh"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rssh::cli
