#pragma once

// Planted-instance generator for the bounded-noise model and the retrieval
// and classification metrics used to evaluate an index.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "rssh/index.hpp"
#include "rssh/query.hpp"

namespace rssh {

using Label = std::int32_t;
using LabelMap = std::unordered_map<PointId, Label>;

/// A noisy dataset with one point within distance 1 of the clean query and
/// every other clean point at distance >= 1 + epsilon, all inside a random
/// k-dimensional subspace, plus noise of norm at most epsilon / 25.
struct PlantedInstance {
  PointSet data;          // noisy points
  Vector query;           // noisy query
  PointId planted_id = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  PointSet clean_data;
  Vector clean_query;
  std::vector<double> noise_norms;
  double query_noise_norm = 0.0;
  /// d x k orthonormal basis of the clean subspace.
  DenseMatrix subspace;
};

PlantedInstance generate_planted_instance(Index n, Index d, Index k, double epsilon, std::uint64_t seed);

/// Re-measures every instance invariant from the stored coordinates. Throws
/// kInvariantViolation on the first failure.
void check_planted_instance(const PlantedInstance& instance);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

/// tp / (tp + fp); kUndefinedMetric when tp + fp == 0.
double precision(const ConfusionCounts& c);
/// (tp + tn) / total; kUndefinedMetric when total == 0.
double accuracy(const ConfusionCounts& c);

/// |retrieved[0..K) ∩ truth[0..K)| / K.
double recall_at_k(std::span<const PointId> retrieved, std::span<const PointId> truth, std::size_t k);

struct ClassificationReport {
  /// One-vs-rest counts per class seen in either the truth or predictions.
  std::map<Label, ConfusionCounts> per_class;
  std::vector<Label> predicted;
  std::size_t correct = 0;
  std::size_t total = 0;

  double overall_accuracy() const;
};

/// Labels each query with the label of its query() result and aggregates
/// one-vs-rest confusion counts. Throws kMissingLabel when a result or a
/// query has no label.
ClassificationReport classify_by_nn(const PointSet& queries, const LabelMap& query_labels,
                                    const IndexModel& model, const PointSet& data, const LabelMap& data_labels,
                                    const QueryParams& params = {});

}  // namespace rssh
