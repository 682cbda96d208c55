#include "rssh/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "rssh/error.hpp"

namespace rssh {

PointSet::PointSet(DenseMatrix points) : PointSet(std::move(points), {}) {}

PointSet::PointSet(DenseMatrix points, std::vector<PointId> ids)
    : points_(std::move(points)), ids_(std::move(ids)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw Error(ErrorCode::kEmptyDataset, "a point set needs at least one point and one dimension");
  }
  require_finite(points_, "point set");
  if (ids_.empty()) {
    ids_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(ids_.begin(), ids_.end(), PointId{0});
  }
  if (static_cast<Index>(ids_.size()) != points_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "id count does not match point count");
  }
  rows_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (!rows_.emplace(ids_[r], static_cast<Index>(r)).second) {
      throw Error(ErrorCode::kInvalidParams, "duplicate point id " + std::to_string(ids_[r]));
    }
  }
}

Index PointSet::row_of(PointId id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(ErrorCode::kInvalidParams, "unknown point id " + std::to_string(id));
  return it->second;
}

PointSet PointSet::subset(std::span<const Index> rows) const {
  DenseMatrix points(static_cast<Index>(rows.size()), dim());
  std::vector<PointId> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    points.row(static_cast<Index>(i)) = points_.row(rows[i]);
    ids.push_back(id(rows[i]));
  }
  return PointSet(std::move(points), std::move(ids));
}

double BuildParams::capture_threshold() const {
  return std::sqrt(2.0) * (1.0 + eta) * resolved_alpha();
}

void BuildParams::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidParams, "k must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidParams, "epsilon must lie in (0, 1)");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::kInvalidParams, "eta must lie in (0, 1)");
  if (!(resolved_alpha() > 0.0) || !std::isfinite(resolved_alpha())) {
    throw Error(ErrorCode::kInvalidParams, "alpha must be positive");
  }
  if (max_levels && *max_levels == 0) throw Error(ErrorCode::kInvalidParams, "max_levels must be positive");
  if (krylov_depth && *krylov_depth < 1) throw Error(ErrorCode::kInvalidParams, "krylov depth must be positive");
}

const char* to_string(CaptureMode mode) noexcept {
  switch (mode) {
    case CaptureMode::kPaperThreshold: return "paper-threshold";
    case CaptureMode::kMedianFallback: return "median-fallback";
    case CaptureMode::kFinalSweep: return "final-sweep";
  }
  return "unknown";
}

double point_subspace_distance(const VectorView& p, const SubspaceBasis& basis) {
  const Vector coords = basis.coordinates(p);
  return (p - basis.basis * coords).norm();
}

Vector subspace_distances(const DenseMatrix& points, const SubspaceBasis& basis) {
  if (points.cols() != basis.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "point dimension does not match basis dimension");
  }
  // Row by row so a point's distance does not depend on which other points
  // share the batch; validate_partition relies on bit-identical recomputation.
  Vector out(points.rows());
  for (Index r = 0; r < points.rows(); ++r) {
    out(r) = point_subspace_distance(points.row(r).transpose(), basis);
  }
  return out;
}

namespace {

CaptureSplit split_by_threshold(std::span<const PointId> ids, const Vector& distances, double threshold) {
  CaptureSplit split;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (distances(static_cast<Index>(i)) <= threshold) {
      split.captured.push_back(ids[i]);
    } else {
      split.remaining.push_back(ids[i]);
    }
  }
  return split;
}

SubspaceBasis fit_level_subspace(const DenseMatrix& points, Index rank, const BuildParams& params,
                                 std::uint64_t seed) {
  KrylovParams krylov = make_krylov_params(rank, params.eta, points.rows(), seed);
  if (params.krylov_depth) krylov.depth = *params.krylov_depth;
  try {
    return block_lanczos(points, krylov);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroMatrix) throw;
    // Every remaining point is the origin; any subspace contains them.
    SubspaceBasis basis;
    basis.basis = DenseMatrix::Identity(points.cols(), rank);
    basis.singular_values.assign(static_cast<std::size_t>(rank), 0.0);
    return basis;
  }
}

}  // namespace

CaptureSplit capture_set(const PointSet& current, const SubspaceBasis& basis, double threshold) {
  return split_by_threshold(current.ids(), subspace_distances(current.points(), basis), threshold);
}

std::size_t level_count_bound(std::size_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidParams, "level bound needs n >= 1");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits + 1;
}

IndexModel build_partition_index(const PointSet& data, const BuildParams& params) {
  params.validate();
  if (params.k > data.dim()) {
    throw Error(ErrorCode::kInvalidParams, "k = " + std::to_string(params.k) + " exceeds dimension " +
                                               std::to_string(data.dim()));
  }
  const auto n = static_cast<std::size_t>(data.size());
  const std::size_t max_levels = params.max_levels.value_or(level_count_bound(n));

  IndexModel model;
  model.params = params;
  model.params.alpha = params.resolved_alpha();
  model.dim = data.dim();
  model.total_points = data.size();

  std::vector<Index> remaining(n);
  std::iota(remaining.begin(), remaining.end(), Index{0});
  while (!remaining.empty()) {
    const std::size_t level_id = model.levels.size();
    const PointSet current = data.subset(remaining);
    const Index count = current.size();
    const bool final_sweep = count < params.k || level_id + 1 == max_levels;
    const Index rank = std::min({params.k, count, data.dim()});

    PartitionLevel level;
    level.level_id = level_id;
    level.basis = fit_level_subspace(current.points(), rank, params, params.seed + level_id);
    const Vector distances = subspace_distances(current.points(), level.basis);

    if (final_sweep) {
      level.capture_mode = CaptureMode::kFinalSweep;
      level.threshold_used = distances.maxCoeff();
    } else {
      level.capture_mode = CaptureMode::kPaperThreshold;
      level.threshold_used = params.capture_threshold();
      const Index captured = (distances.array() <= level.threshold_used).count();
      if (2 * captured < count) {
        // Fewer than half captured: fall back to the median distance so the
        // level bound holds on data outside the noise model.
        std::vector<double> sorted(distances.data(), distances.data() + count);
        const auto median = sorted.begin() + (count + 1) / 2 - 1;
        std::nth_element(sorted.begin(), median, sorted.end());
        level.capture_mode = CaptureMode::kMedianFallback;
        level.threshold_used = *median;
      }
    }

    CaptureSplit split = split_by_threshold(current.ids(), distances, level.threshold_used);
    level.member_ids = std::move(split.captured);
    std::vector<Index> next;
    next.reserve(split.remaining.size());
    for (const PointId id : split.remaining) next.push_back(data.row_of(id));
    remaining = std::move(next);
    model.levels.push_back(std::move(level));
  }
  return model;
}

void validate_partition(const IndexModel& model, const PointSet& data) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvariantViolation, what); };
  if (model.dim != data.dim()) fail("model dimension differs from data dimension");
  if (model.total_points != data.size()) fail("model point count differs from data size");
  if (model.levels.empty()) fail("model has no levels");
  if (!model.params.max_levels && model.levels.size() > level_count_bound(static_cast<std::size_t>(data.size()))) {
    fail("level count exceeds ceil(log2 n) + 1");
  }

  std::unordered_set<PointId> seen;
  for (std::size_t i = 0; i < model.levels.size(); ++i) {
    const PartitionLevel& level = model.levels[i];
    if (level.level_id != i) fail("level ids are not consecutive");
    if (level.member_ids.empty()) fail("level " + std::to_string(i) + " is empty");
    if (level.basis.dim() != data.dim()) fail("level " + std::to_string(i) + " basis has wrong dimension");
    std::vector<Index> rows;
    rows.reserve(level.member_ids.size());
    for (const PointId id : level.member_ids) {
      if (!data.contains(id)) fail("level " + std::to_string(i) + " references unknown id " + std::to_string(id));
      if (!seen.insert(id).second) fail("id " + std::to_string(id) + " appears in more than one level");
      rows.push_back(data.row_of(id));
    }
    const Vector distances = subspace_distances(data.subset(rows).points(), level.basis);
    if (distances.size() > 0 && distances.maxCoeff() > level.threshold_used) {
      fail("level " + std::to_string(i) + " has a member beyond its capture threshold");
    }
  }
  if (static_cast<Index>(seen.size()) != data.size()) fail("levels do not cover every point");
}

}  // namespace rssh
