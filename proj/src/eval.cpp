#include "rssh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <unordered_set>

#include "rssh/error.hpp"

namespace rssh {
namespace {

constexpr int kMaxRejections = 1000;

Vector random_unit(std::mt19937_64& rng, Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
    const double length = v.norm();
    if (length > 1e-12) return v / length;
  }
  throw Error(ErrorCode::kRejectionTimeout, "could not draw a random direction");
}

// Noise vector with norm uniform in [0, bound], direction uniform on the
// sphere of the ambient space.
Vector bounded_noise(std::mt19937_64& rng, Index dim, double bound) {
  std::uniform_real_distribution<double> radius(0.0, bound);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const Vector t = radius(rng) * random_unit(rng, dim);
    if (t.norm() <= bound) return t;
  }
  throw Error(ErrorCode::kRejectionTimeout, "could not draw noise within the bound");
}

}  // namespace

PlantedInstance generate_planted_instance(Index n, Index d, Index k, double epsilon, std::uint64_t seed) {
  if (k < 2 || k > d || n < 2 || !(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "planted instance needs 2 <= k <= d, n >= 2, 0 < epsilon < 1");
  }
  const double alpha = epsilon / 25.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  DenseMatrix subspace;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxRejections) throw Error(ErrorCode::kRejectionTimeout, "could not draw a subspace");
    DenseMatrix g(d, k);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < k; ++j) g(i, j) = normal(rng);
    }
    subspace = orthonormalize(g);
    if (subspace.cols() == k) break;
  }

  Vector query_coords(k);
  for (Index j = 0; j < k; ++j) query_coords(j) = normal(rng);
  const Vector clean_query = subspace * query_coords;

  std::uniform_int_distribution<Index> pick(0, n - 1);
  const Index planted_row = pick(rng);
  std::uniform_real_distribution<double> near_radius(0.5, 1.0);
  std::uniform_real_distribution<double> far_radius(1.0 + epsilon, 3.0);

  DenseMatrix clean(n, d);
  for (Index i = 0; i < n; ++i) {
    const bool planted = i == planted_row;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRejections) {
        throw Error(ErrorCode::kRejectionTimeout, "rejection sampling failed for point " + std::to_string(i));
      }
      const double radius = planted ? near_radius(rng) : far_radius(rng);
      const Vector coords = query_coords + radius * random_unit(rng, k);
      const Vector point = subspace * coords;
      const double distance = (point - clean_query).norm();
      if (planted ? distance <= 1.0 : distance >= 1.0 + epsilon) {
        clean.row(i) = point.transpose();
        break;
      }
    }
  }

  DenseMatrix noisy = clean;
  std::vector<double> noise_norms(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Vector t = bounded_noise(rng, d, alpha);
    noisy.row(i) += t.transpose();
    noise_norms[static_cast<std::size_t>(i)] = (noisy.row(i) - clean.row(i)).norm();
  }
  const Vector query = clean_query + bounded_noise(rng, d, alpha);

  PlantedInstance out{
      .data = PointSet(std::move(noisy)),
      .query = query,
      .planted_id = planted_row,
      .epsilon = epsilon,
      .alpha = alpha,
      .clean_data = PointSet(std::move(clean)),
      .clean_query = clean_query,
      .noise_norms = std::move(noise_norms),
      .query_noise_norm = (query - clean_query).norm(),
      .subspace = std::move(subspace),
  };
  return out;
}

void check_planted_instance(const PlantedInstance& instance) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvariantViolation, what); };
  const PointSet& clean = instance.clean_data;
  const PointSet& noisy = instance.data;
  if (clean.size() != noisy.size() || clean.dim() != noisy.dim()) fail("clean and noisy sets differ in shape");
  const Index k = instance.subspace.cols();
  const DenseMatrix gram = instance.subspace.transpose() * instance.subspace;
  if ((gram - DenseMatrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-10) fail("subspace basis not orthonormal");

  SubspaceBasis span{instance.subspace, {}};
  const Vector in_span = subspace_distances(clean.points(), span);
  if (in_span.maxCoeff() > 1e-9) fail("a clean point lies outside the subspace");
  if (point_subspace_distance(instance.clean_query, span) > 1e-9) fail("clean query lies outside the subspace");

  for (Index i = 0; i < clean.size(); ++i) {
    const double distance = (clean.row(i).transpose() - instance.clean_query).norm();
    if (clean.id(i) == instance.planted_id) {
      if (distance > 1.0) fail("planted point farther than 1 from the query");
    } else if (distance < 1.0 + instance.epsilon) {
      fail("point " + std::to_string(clean.id(i)) + " closer than 1 + epsilon to the query");
    }
    const double noise = (noisy.row(i) - clean.row(i)).norm();
    if (noise > instance.alpha) fail("noise of point " + std::to_string(clean.id(i)) + " exceeds alpha");
  }
  if ((instance.query - instance.clean_query).norm() > instance.alpha) fail("query noise exceeds alpha");
}

double precision(const ConfusionCounts& c) {
  const std::size_t predicted = c.tp + c.fp;
  if (predicted == 0) throw Error(ErrorCode::kUndefinedMetric, "precision undefined when tp + fp = 0");
  return static_cast<double>(c.tp) / static_cast<double>(predicted);
}

double accuracy(const ConfusionCounts& c) {
  const std::size_t total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) throw Error(ErrorCode::kUndefinedMetric, "accuracy undefined on zero total");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

double recall_at_k(std::span<const PointId> retrieved, std::span<const PointId> truth, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidParams, "recall@K needs K >= 1");
  const std::unordered_set<PointId> wanted(truth.begin(), truth.begin() + std::min(k, truth.size()));
  std::unordered_set<PointId> hits;
  for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i) {
    if (wanted.contains(retrieved[i])) hits.insert(retrieved[i]);
  }
  return static_cast<double>(hits.size()) / static_cast<double>(k);
}

double ClassificationReport::overall_accuracy() const {
  if (total == 0) throw Error(ErrorCode::kUndefinedMetric, "no queries classified");
  return static_cast<double>(correct) / static_cast<double>(total);
}

ClassificationReport classify_by_nn(const PointSet& queries, const LabelMap& query_labels, const IndexModel& model,
                                    const PointSet& data, const LabelMap& data_labels, const QueryParams& params) {
  const Searcher searcher(model, data);
  std::vector<Label> truth;
  ClassificationReport report;
  std::set<Label> classes;
  for (const auto& [id, label] : data_labels) classes.insert(label);

  for (Index r = 0; r < queries.size(); ++r) {
    const auto truth_it = query_labels.find(queries.id(r));
    if (truth_it == query_labels.end()) {
      throw Error(ErrorCode::kMissingLabel, "query " + std::to_string(queries.id(r)) + " has no label");
    }
    const QueryResult result = searcher.query(queries.row(r).transpose(), params);
    const auto predicted_it = data_labels.find(result.point_id);
    if (predicted_it == data_labels.end()) {
      throw Error(ErrorCode::kMissingLabel, "data point " + std::to_string(result.point_id) + " has no label");
    }
    truth.push_back(truth_it->second);
    report.predicted.push_back(predicted_it->second);
    classes.insert(truth_it->second);
  }

  for (const Label c : classes) {
    ConfusionCounts counts;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool actual = truth[i] == c;
      const bool guessed = report.predicted[i] == c;
      if (actual && guessed) ++counts.tp;
      else if (!actual && guessed) ++counts.fp;
      else if (actual) ++counts.fn;
      else ++counts.tn;
    }
    report.per_class.emplace(c, counts);
  }
  for (std::size_t i = 0; i < truth.size(); ++i) report.correct += truth[i] == report.predicted[i] ? 1 : 0;
  report.total = truth.size();
  return report;
}

}  // namespace rssh
