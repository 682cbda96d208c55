// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rssh/error.hpp"
#include "rssh/eval.hpp"
#include "rssh/index.hpp"
#include "rssh/io.hpp"
#include "rssh/linalg.hpp"
#include "rssh/parallel.hpp"
#include "rssh/query.hpp"

namespace {

using namespace rssh;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

IndexModel build_planted(const PlantedInstance& instance, std::uint64_t seed) {
  BuildParams params;
  params.k = 8;
  params.epsilon = instance.epsilon;
  params.seed = seed;
  return build_partition_index(instance.data, params);
}

struct SvdTrials {
  int spectral = 0;
  int per_vector = 0;
  double seconds = 0.0;
};

SvdTrials run_svd_trials() {
  constexpr int kTrials = 50;
  constexpr Index kRank = 5;
  constexpr double kEta = 0.1;
  std::vector<int> spectral(kTrials);
  std::vector<int> per_vector(kTrials);
  const auto start = Clock::now();
  parallel_for(kTrials, [&](std::size_t t) {
    const DenseMatrix a = gaussian_sketch(100, 30, 10 + t);
    const SubspaceBasis basis = block_lanczos(a, make_krylov_params(kRank, kEta, a.rows(), 7000 + t));
    const std::vector<double> sigma = exact_svd_oracle(a, 6).singular_values;
    const double next = sigma[5];
    spectral[t] = exact_singular_values(projection_residual(a, basis)).front() <= (1.0 + kEta) * next;
    bool ok = true;
    for (std::size_t i = 0; i < 5; ++i) {
      const double approx = basis.singular_values[i];
      ok = ok && std::abs(approx * approx - sigma[i] * sigma[i]) <= kEta * next * next;
    }
    per_vector[t] = ok;
  });
  SvdTrials out;
  out.seconds = seconds_since(start);
  for (int t = 0; t < kTrials; ++t) {
    out.spectral += spectral[static_cast<std::size_t>(t)];
    out.per_vector += per_vector[static_cast<std::size_t>(t)];
  }
  return out;
}

Verdict level_bound() {
  int instances_with_half_capture = 0;
  std::size_t worst_levels = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PlantedInstance instance = generate_planted_instance(256, 32, 8, 0.5, 100 + seed);
    const IndexModel model = build_planted(instance, seed);
    validate_partition(model, instance.data);
    worst_levels = std::max(worst_levels, model.levels.size());
    std::size_t remaining = 256;
    bool half = true;
    for (const PartitionLevel& level : model.levels) {
      if (level.capture_mode == CaptureMode::kPaperThreshold) half = half && 2 * level.member_ids.size() >= remaining;
      remaining -= level.member_ids.size();
    }
    instances_with_half_capture += half;
  }
  return {worst_levels <= 9 && instances_with_half_capture >= 18,
          fmt::format("max levels {} (bound 9), half-capture in {}/20 instances (need 18)", worst_levels,
                      instances_with_half_capture)};
}

Verdict planted_nn_is_brute_force_nn() {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PlantedInstance instance = generate_planted_instance(256, 32, 8, 0.5, 200 + seed);
    check_planted_instance(instance);
    hits += brute_force_nn(instance.query, instance.data).point_id == instance.planted_id;
  }
  return {hits == 20, fmt::format("{}/20 instances (need 20)", hits)};
}

Verdict planted_recovery() {
  constexpr double kEpsilon = 0.5;
  int one_probe = 0;
  int three_probes = 0;
  int ratio_checks = 0;
  int ratio_violations = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PlantedInstance instance = generate_planted_instance(256, 32, 8, kEpsilon, 300 + seed);
    const IndexModel model = build_planted(instance, seed);
    QueryParams qp;
    qp.probes = 1;
    one_probe += query(instance.query, model, instance.data, qp).point_id == instance.planted_id;
    qp.probes = 3;
    three_probes += query(instance.query, model, instance.data, qp).point_id == instance.planted_id;

    // Ratio check inside the routed level, when it holds the planted point.
    const PartitionLevel& routed = model.levels[nearest_subspace(instance.query, model).front()];
    if (std::find(routed.member_ids.begin(), routed.member_ids.end(), instance.planted_id) ==
        routed.member_ids.end()) {
      continue;
    }
    ++ratio_checks;
    const Vector q = routed.basis.coordinates(instance.query);
    const auto coords = [&](PointId id) {
      return routed.basis.coordinates(instance.data.row(instance.data.row_of(id)).transpose());
    };
    const double planted = (q - coords(instance.planted_id)).norm();
    for (const PointId id : routed.member_ids) {
      if (id == instance.planted_id) continue;
      const double ratio = (q - coords(id)).norm() / planted;
      worst_ratio = std::min(worst_ratio, ratio);
      if (!(ratio > 1.0 + kEpsilon / 5.0)) ++ratio_violations;
    }
  }
  return {one_probe >= 18 && three_probes == 20 && ratio_violations == 0 && ratio_checks > 0,
          fmt::format("probes=1 {}/20 (need 18), probes=3 {}/20 (need 20), ratio > {} in {} routed levels "
                      "with {} violations (min ratio {:.4f})",
                      one_probe, three_probes, 1.0 + kEpsilon / 5.0, ratio_checks, ratio_violations, worst_ratio)};
}

Verdict degenerate_exactness() {
  std::mt19937_64 rng(42);
  int matches = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Index n = std::uniform_int_distribution<Index>(20, 200)(rng);
    const Index d = std::uniform_int_distribution<Index>(2, 12)(rng);
    const PointSet data(gaussian_sketch(n, d, 1000 + i));
    BuildParams params;
    params.k = d;
    params.seed = i;
    const IndexModel model = build_partition_index(data, params);
    QueryParams qp;
    qp.probes = model.levels.size();
    const Vector q = gaussian_sketch(d, 1, 5000 + i).col(0);
    matches += query(q, model, data, qp).point_id == brute_force_nn(q, data).point_id;
  }
  return {matches == 100, fmt::format("{}/100 instances match brute force (need 100)", matches)};
}

Verdict mnist() {
  const fs::path dir = fs::path(RSSH_DATA_DIR) / "mnist";
  DatasetDescriptor train;
  train.path = dir / "train-images-idx3-ubyte";
  train.format = DatasetFormat::kIdx;
  train.limit = 5000;
  DatasetDescriptor queries;
  queries.path = dir / "query-images-idx3-ubyte";
  queries.format = DatasetFormat::kIdx;
  queries.limit = 100;
  const Dataset data = load_dataset(train);
  const Dataset qs = load_dataset(queries);

  BuildParams params;
  params.k = 16;
  const auto start = Clock::now();
  const IndexModel model = build_partition_index(data.points, params);
  const double build_seconds = seconds_since(start);

  const std::vector<std::size_t> cutoffs{1, 10, 25};
  const Searcher searcher(model, data.points);
  auto recall_for = [&](std::size_t probes) {
    QueryParams qp;
    qp.probes = probes;
    const auto results = searcher.batch_top_k(qs.points.points(), 25, qp);
    std::vector<double> recall(cutoffs.size(), 0.0);
    for (Index r = 0; r < qs.points.size(); ++r) {
      const auto truth = brute_force_top_k(qs.points.row(r).transpose(), data.points, 25);
      std::vector<PointId> got;
      std::vector<PointId> want;
      for (const QueryResult& x : results[static_cast<std::size_t>(r)]) got.push_back(x.point_id);
      for (const QueryResult& x : truth) want.push_back(x.point_id);
      for (std::size_t i = 0; i < cutoffs.size(); ++i) recall[i] += recall_at_k(got, want, cutoffs[i]);
    }
    for (double& x : recall) x /= static_cast<double>(qs.points.size());
    return recall;
  };
  const std::vector<double> one = recall_for(1);
  const std::vector<double> all = recall_for(model.levels.size());
  const bool monotone = one[2] >= one[1] && one[1] >= one[0];
  const bool probes_help = all[0] >= one[0];
  const bool fast = build_seconds < 60.0;
  return {data.points.dim() == 784 && monotone && probes_help && fast,
          fmt::format("n={} d={} levels={} build {:.2f} s (limit 60); recall@1/10/25 probes=1: {:.3f}/{:.3f}/{:.3f}, "
                      "probes=all: {:.3f}/{:.3f}/{:.3f}",
                      data.points.size(), data.points.dim(), model.levels.size(), build_seconds, one[0], one[1],
                      one[2], all[0], all[1], all[2])};
}

Verdict metric_examples() {
  int failures = 0;
  auto near = [&](double got, double want) { failures += std::abs(got - want) > 1e-12; };
  near(precision({.tp = 3, .fp = 1}), 0.75);
  near(precision({.tp = 0, .fp = 5}), 0.0);
  try {
    precision({});
    ++failures;
  } catch (const Error& e) {
    failures += e.code() != ErrorCode::kUndefinedMetric;
  }
  near(accuracy({1, 1, 1, 1}), 0.5);
  near(accuracy({10, 0, 0, 0}), 1.0);
  near(accuracy({0, 0, 3, 2}), 0.0);
  const std::vector<PointId> ranking{4, 8, 15, 16, 23, 42, 7, 9, 11, 13};
  const std::vector<PointId> disjoint{1, 2, 3, 5, 6, 10, 12, 14, 17, 18};
  const std::vector<PointId> three_of_four{4, 8, 99, 16};
  near(recall_at_k(ranking, ranking, 10), 1.0);
  near(recall_at_k(ranking, disjoint, 10), 0.0);
  near(recall_at_k(three_of_four, ranking, 4), 0.75);
  return {failures == 0, fmt::format("{} of 10 hand-computed values off by more than 1e-12", failures)};
}

Verdict serialization() {
  const fs::path dir = fs::temp_directory_path() / "rssh_acceptance";
  fs::create_directories(dir);
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PlantedInstance instance = generate_planted_instance(256, 32, 8, 0.5, 400 + seed);
    const IndexModel model = build_planted(instance, seed);
    const fs::path path = dir / fmt::format("index_{}.bin", seed);
    save_index(model, path);
    const IndexModel loaded = load_index(path);
    QueryParams qp;
    qp.probes = 2;
    bool same = loaded == model;
    for (Index r = 0; r < 5 && same; ++r) {
      const Vector q = r == 0 ? instance.query : Vector(gaussian_sketch(32, 1, 900 + 10 * seed + r).col(0));
      same = top_k_search(q, loaded, instance.data, 10, qp) == top_k_search(q, model, instance.data, 10, qp);
    }
    identical += same;
  }
  fs::remove_all(dir);
  return {identical == 10, fmt::format("{}/10 reloaded indexes answer identically (need 10)", identical)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
    Verdict verdict;
    try {
      verdict = check();
    } catch (const std::exception& e) {
      verdict = {false, std::string("error: ") + e.what()};
    }
    failed += !verdict.pass;
    fmt::print("AC{} {} {}: {}\n", id, verdict.pass ? "PASS" : "FAIL", name, verdict.detail);
    std::fflush(stdout);
  };

  SvdTrials svd;
  report(1, "spectral-bound", [&] {
    svd = run_svd_trials();
    return Verdict{svd.spectral >= 45 && svd.seconds < 10.0,
                   fmt::format("{}/50 trials within (1+eta) sigma_6 (need 45), {:.2f} s (limit 10)", svd.spectral,
                               svd.seconds)};
  });
  report(2, "per-vector-bound", [&] {
    return Verdict{svd.per_vector >= 45,
                   fmt::format("{}/50 trials within eta sigma_6^2 for all i <= 5 (need 45)", svd.per_vector)};
  });
  report(3, "level-bound", level_bound);
  report(4, "planted-is-nearest", planted_nn_is_brute_force_nn);
  report(5, "planted-recovery", planted_recovery);
  report(6, "degenerate-exactness", degenerate_exactness);
  report(7, "mnist-desk-scale", mnist);
  report(8, "metric-examples", metric_examples);
  report(9, "serialization", serialization);
  fmt::print("{} of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
