#pragma once

// Query engine: route a query to its nearest level subspaces and search those
// levels' members in projected coordinates.

#include <cstddef>
#include <optional>
#include <vector>

#include "rssh/index.hpp"

namespace rssh {

enum class MetricSpace { kProjected, kOriginal };

struct QueryParams {
  /// Number of nearest levels to search.
  std::size_t probes = 1;
  /// Ranking metric; original-space ranking is an ablation.
  MetricSpace metric = MetricSpace::kProjected;
};

struct QueryResult {
  PointId point_id = 0;
  double projected_distance = 0.0;
  double original_distance = 0.0;
  /// Unset for brute-force results.
  std::optional<std::size_t> level_id;
  std::size_t candidates_examined = 0;

  bool operator==(const QueryResult&) const = default;
};

/// Level ids sorted by distance from q to each level's subspace, ties to the
/// lower level id.
std::vector<std::size_t> nearest_subspace(const VectorView& q, const IndexModel& model);

/// Nearest member of `level` to q by projected distance, ties to lower id.
QueryResult search_in_level(const VectorView& q, const PartitionLevel& level, const PointSet& data);

QueryResult query(const VectorView& q, const IndexModel& model, const PointSet& data,
                  const QueryParams& params = {});

/// Best `count` candidates across the probed levels, ascending by the ranking
/// metric. candidates_examined on every entry is the total scanned.
std::vector<QueryResult> top_k_search(const VectorView& q, const IndexModel& model, const PointSet& data,
                                      std::size_t count, const QueryParams& params = {});

/// Exact nearest neighbor over all of `data`, ties to lower id.
QueryResult brute_force_nn(const VectorView& q, const PointSet& data);

/// Exact `count` nearest neighbors, ascending by (distance, id).
std::vector<QueryResult> brute_force_top_k(const VectorView& q, const PointSet& data, std::size_t count);

/// Caches every member's projected coordinates so repeated queries skip the
/// per-query projection of the data. Holds references: `model` and `data`
/// must outlive the searcher.
class Searcher {
 public:
  Searcher(const IndexModel& model, const PointSet& data);

  QueryResult query(const VectorView& q, const QueryParams& params = {}) const;
  std::vector<QueryResult> top_k(const VectorView& q, std::size_t count, const QueryParams& params = {}) const;

  /// One result list per row of `queries`; may run across threads, results
  /// do not depend on the thread count.
  std::vector<std::vector<QueryResult>> batch_top_k(const DenseMatrix& queries, std::size_t count,
                                                    const QueryParams& params = {}) const;

  const IndexModel& model() const { return model_; }
  const PointSet& data() const { return data_; }

 private:
  struct LevelCache {
    DenseMatrix coordinates;     // |members| x rank
    std::vector<Index> rows;     // row of each member in data_
  };

  const IndexModel& model_;
  const PointSet& data_;
  std::vector<LevelCache> cache_;
};

}  // namespace rssh
