#include "rssh/query.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rssh/error.hpp"
#include "rssh/parallel.hpp"

namespace rssh {
namespace {

struct Candidate {
  double key;
  double projected;
  double original;
  PointId id;
  std::size_t level;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.key != b.key) return a.key < b.key;
  return a.id < b.id;
}

void require_query_dim(const VectorView& q, Index dim) {
  if (q.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has dimension " + std::to_string(q.size()) + ", expected " + std::to_string(dim));
  }
}

// Scores every member of one level. `coordinates`, when given, holds the
// members' projected coordinates in member order.
void scan_level(const VectorView& q, const PartitionLevel& level, const PointSet& data,
                std::span<const Index> rows, const DenseMatrix* coordinates, MetricSpace metric,
                std::vector<Candidate>& out) {
  const Vector query_coords = level.basis.coordinates(q);
  Vector member_coords(level.basis.rank());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto point = data.row(rows[m]).transpose();
    if (coordinates != nullptr) {
      member_coords = coordinates->row(static_cast<Index>(m)).transpose();
    } else {
      member_coords = level.basis.coordinates(point);
    }
    const double projected = (query_coords - member_coords).norm();
    const double original = (q - point).norm();
    const double key = metric == MetricSpace::kProjected ? projected : original;
    out.push_back(Candidate{key, projected, original, data.id(rows[m]), level.level_id});
  }
}

std::vector<Index> member_rows(const PartitionLevel& level, const PointSet& data) {
  std::vector<Index> rows;
  rows.reserve(level.member_ids.size());
  for (const PointId id : level.member_ids) rows.push_back(data.row_of(id));
  return rows;
}

std::size_t probe_count(const IndexModel& model, const QueryParams& params) {
  if (params.probes < 1) throw Error(ErrorCode::kInvalidParams, "probes must be at least 1");
  return std::min(params.probes, model.levels.size());
}

QueryResult to_result(const Candidate& c, std::size_t examined) {
  return QueryResult{c.id, c.projected, c.original, c.level, examined};
}

std::vector<QueryResult> select_best(std::vector<Candidate>& candidates, std::size_t count) {
  const std::size_t examined = candidates.size();
  const std::size_t keep = std::min(count, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    candidate_less);
  std::vector<QueryResult> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(to_result(candidates[i], examined));
  return out;
}

}  // namespace

std::vector<std::size_t> nearest_subspace(const VectorView& q, const IndexModel& model) {
  if (model.levels.empty()) throw Error(ErrorCode::kEmptyModel, "model has no levels");
  require_query_dim(q, model.dim);
  std::vector<double> distances;
  distances.reserve(model.levels.size());
  for (const PartitionLevel& level : model.levels) distances.push_back(point_subspace_distance(q, level.basis));
  std::vector<std::size_t> order(model.levels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });
  return order;
}

QueryResult search_in_level(const VectorView& q, const PartitionLevel& level, const PointSet& data) {
  if (level.member_ids.empty()) throw Error(ErrorCode::kEmptyModel, "level has no members");
  require_query_dim(q, data.dim());
  std::vector<Candidate> candidates;
  candidates.reserve(level.member_ids.size());
  scan_level(q, level, data, member_rows(level, data), nullptr, MetricSpace::kProjected, candidates);
  return select_best(candidates, 1).front();
}

std::vector<QueryResult> top_k_search(const VectorView& q, const IndexModel& model, const PointSet& data,
                                      std::size_t count, const QueryParams& params) {
  if (count < 1) throw Error(ErrorCode::kInvalidParams, "top-k needs K >= 1");
  const std::vector<std::size_t> order = nearest_subspace(q, model);
  const std::size_t probes = probe_count(model, params);
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < probes; ++p) {
    const PartitionLevel& level = model.levels[order[p]];
    scan_level(q, level, data, member_rows(level, data), nullptr, params.metric, candidates);
  }
  return select_best(candidates, count);
}

QueryResult query(const VectorView& q, const IndexModel& model, const PointSet& data, const QueryParams& params) {
  return top_k_search(q, model, data, 1, params).front();
}

std::vector<QueryResult> brute_force_top_k(const VectorView& q, const PointSet& data, std::size_t count) {
  if (count < 1) throw Error(ErrorCode::kInvalidParams, "top-k needs K >= 1");
  require_query_dim(q, data.dim());
  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<std::size_t>(data.size()));
  for (Index r = 0; r < data.size(); ++r) {
    const double distance = (q - data.row(r).transpose()).norm();
    candidates.push_back(Candidate{distance, distance, distance, data.id(r), 0});
  }
  std::vector<QueryResult> out = select_best(candidates, count);
  for (QueryResult& result : out) result.level_id.reset();
  return out;
}

QueryResult brute_force_nn(const VectorView& q, const PointSet& data) {
  return brute_force_top_k(q, data, 1).front();
}

Searcher::Searcher(const IndexModel& model, const PointSet& data) : model_(model), data_(data) {
  if (model.levels.empty()) throw Error(ErrorCode::kEmptyModel, "model has no levels");
  if (model.dim != data.dim()) throw Error(ErrorCode::kDimensionMismatch, "model and data dimensions differ");
  cache_.reserve(model.levels.size());
  for (const PartitionLevel& level : model.levels) {
    LevelCache entry;
    entry.rows = member_rows(level, data);
    entry.coordinates.resize(static_cast<Index>(entry.rows.size()), level.basis.rank());
    for (std::size_t m = 0; m < entry.rows.size(); ++m) {
      entry.coordinates.row(static_cast<Index>(m)) =
          level.basis.coordinates(data.row(entry.rows[m]).transpose()).transpose();
    }
    cache_.push_back(std::move(entry));
  }
}

std::vector<QueryResult> Searcher::top_k(const VectorView& q, std::size_t count, const QueryParams& params) const {
  if (count < 1) throw Error(ErrorCode::kInvalidParams, "top-k needs K >= 1");
  const std::vector<std::size_t> order = nearest_subspace(q, model_);
  const std::size_t probes = probe_count(model_, params);
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < probes; ++p) {
    const std::size_t level = order[p];
    scan_level(q, model_.levels[level], data_, cache_[level].rows, &cache_[level].coordinates, params.metric,
               candidates);
  }
  return select_best(candidates, count);
}

QueryResult Searcher::query(const VectorView& q, const QueryParams& params) const {
  return top_k(q, 1, params).front();
}

std::vector<std::vector<QueryResult>> Searcher::batch_top_k(const DenseMatrix& queries, std::size_t count,
                                                            const QueryParams& params) const {
  std::vector<std::vector<QueryResult>> out(static_cast<std::size_t>(queries.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = top_k(queries.row(static_cast<Index>(i)).transpose(), count, params);
  });
  return out;
}

}  // namespace rssh
