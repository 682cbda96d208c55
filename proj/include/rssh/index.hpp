#pragma once

// Multi-level partition index: each level fits a rank-k subspace to the
// points not yet captured, captures every point close to it, and recurses on
// the rest.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "rssh/linalg.hpp"

namespace rssh {

using PointId = std::int64_t;

/// Observed points, one per row, each with a stable id.
class PointSet {
 public:
  /// Ids default to the row numbers 0..n-1.
  explicit PointSet(DenseMatrix points);
  PointSet(DenseMatrix points, std::vector<PointId> ids);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const DenseMatrix& points() const { return points_; }
  std::span<const PointId> ids() const { return ids_; }
  PointId id(Index row) const { return ids_[static_cast<std::size_t>(row)]; }
  auto row(Index r) const { return points_.row(r); }

  /// Row holding `id`; throws kInvalidParams for unknown ids.
  Index row_of(PointId id) const;
  bool contains(PointId id) const { return rows_.contains(id); }

  PointSet subset(std::span<const Index> rows) const;

  bool operator==(const PointSet& other) const {
    return ids_ == other.ids_ && points_ == other.points_;
  }

 private:
  DenseMatrix points_;
  std::vector<PointId> ids_;
  std::unordered_map<PointId, Index> rows_;
};

struct BuildParams {
  Index k = 8;
  double epsilon = 0.5;
  double eta = 0.1;
  /// Noise bound; defaults to epsilon / 25.
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  /// Hard cap on levels; defaults to level_count_bound(n).
  std::optional<std::size_t> max_levels;
  /// Block Krylov depth override; defaults to default_krylov_depth(n_i, eta).
  std::optional<int> krylov_depth;

  double resolved_alpha() const { return alpha.value_or(epsilon / 25.0); }
  /// sqrt(2) (1 + eta) alpha.
  double capture_threshold() const;
  void validate() const;

  bool operator==(const BuildParams&) const = default;
};

enum class CaptureMode : std::uint32_t {
  kPaperThreshold = 0,
  kMedianFallback = 1,
  kFinalSweep = 2,
};

const char* to_string(CaptureMode mode) noexcept;

struct PartitionLevel {
  std::size_t level_id = 0;
  SubspaceBasis basis;
  std::vector<PointId> member_ids;
  double threshold_used = 0.0;
  CaptureMode capture_mode = CaptureMode::kPaperThreshold;

  bool operator==(const PartitionLevel&) const = default;
};

struct IndexModel {
  BuildParams params;
  std::vector<PartitionLevel> levels;
  Index dim = 0;
  Index total_points = 0;

  bool operator==(const IndexModel&) const = default;
};

/// Euclidean distance from p to span(basis), i.e. |p - V V^T p|.
double point_subspace_distance(const VectorView& p, const SubspaceBasis& basis);

/// Distance of every row of `points` to span(basis).
Vector subspace_distances(const DenseMatrix& points, const SubspaceBasis& basis);

struct CaptureSplit {
  std::vector<PointId> captured;
  std::vector<PointId> remaining;
};

/// Splits `current` by distance to span(basis); the boundary is captured.
CaptureSplit capture_set(const PointSet& current, const SubspaceBasis& basis, double threshold);

/// ceil(log2 n) + 1.
std::size_t level_count_bound(std::size_t n);

IndexModel build_partition_index(const PointSet& data, const BuildParams& params);

/// Checks that the levels partition the ids of `data` and that every member
/// lies within its level's threshold. Throws kInvariantViolation otherwise.
void validate_partition(const IndexModel& model, const PointSet& data);

}  // namespace rssh
