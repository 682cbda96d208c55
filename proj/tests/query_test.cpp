#include "rssh/query.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "rssh/error.hpp"
#include "rssh/eval.hpp"

namespace rssh {
namespace {

DenseMatrix unit_columns(Index dim, std::initializer_list<Index> axes) {
  DenseMatrix v = DenseMatrix::Zero(dim, static_cast<Index>(axes.size()));
  Index c = 0;
  for (const Index axis : axes) v(axis, c++) = 1.0;
  return v;
}

PartitionLevel make_level(std::size_t id, DenseMatrix basis, std::vector<PointId> members) {
  PartitionLevel level;
  level.level_id = id;
  const auto rank = static_cast<std::size_t>(basis.cols());
  level.basis = SubspaceBasis{std::move(basis), std::vector<double>(rank, 1.0)};
  level.member_ids = std::move(members);
  level.threshold_used = 1.0;
  return level;
}

IndexModel full_rank_model(const PointSet& data) {
  BuildParams params;
  params.k = data.dim();
  params.max_levels = 1;
  return build_partition_index(data, params);
}

// Three levels in R^6 spanning disjoint coordinate planes; points live in
// rows 0..5 as scaled axis vectors.
struct ThreeLevels {
  PointSet data{DenseMatrix(DenseMatrix::Identity(6, 6) * 2.0)};
  IndexModel model;

  ThreeLevels() {
    model.dim = 6;
    model.total_points = 6;
    model.levels.push_back(make_level(0, unit_columns(6, {0, 1}), {0, 1}));
    model.levels.push_back(make_level(1, unit_columns(6, {2, 3}), {2, 3}));
    model.levels.push_back(make_level(2, unit_columns(6, {4, 5}), {4, 5}));
  }
};

TEST(NearestSubspace, SingleLevel) {
  IndexModel model;
  model.dim = 2;
  model.levels.push_back(make_level(0, unit_columns(2, {0}), {0}));
  EXPECT_EQ(nearest_subspace(Vector::Ones(2), model), (std::vector<std::size_t>{0}));
}

TEST(NearestSubspace, QueryInsideLevelTwo) {
  const ThreeLevels fx;
  Vector q = Vector::Zero(6);
  q(4) = 3.0;
  q(5) = -1.0;
  EXPECT_EQ(nearest_subspace(q, fx.model).front(), 2u);
}

TEST(NearestSubspace, HandConstructedDistances) {
  // Level i is the coordinate plane missing axis i, so its distance to q is |q_i|.
  IndexModel model;
  model.dim = 3;
  model.levels.push_back(make_level(0, unit_columns(3, {1, 2}), {}));
  model.levels.push_back(make_level(1, unit_columns(3, {0, 2}), {}));
  model.levels.push_back(make_level(2, unit_columns(3, {0, 1}), {}));
  Vector q(3);
  q << 0.3, 0.1, 0.7;
  EXPECT_EQ(nearest_subspace(q, model), (std::vector<std::size_t>{1, 0, 2}));
}

TEST(NearestSubspace, TiesGoToLowerLevel) {
  const ThreeLevels fx;
  EXPECT_EQ(nearest_subspace(Vector::Zero(6), fx.model), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(NearestSubspace, Errors) {
  IndexModel empty;
  empty.dim = 2;
  EXPECT_THROW(nearest_subspace(Vector::Zero(2), empty), Error);
  const ThreeLevels fx;
  EXPECT_THROW(nearest_subspace(Vector::Zero(3), fx.model), Error);
}

TEST(SearchInLevel, SingleMember) {
  const ThreeLevels fx;
  PartitionLevel level = fx.model.levels[1];
  level.member_ids = {3};
  const QueryResult r = search_in_level(Vector::Zero(6), level, fx.data);
  EXPECT_EQ(r.point_id, 3);
  EXPECT_EQ(r.candidates_examined, 1u);
  EXPECT_EQ(r.level_id, 1u);
}

TEST(SearchInLevel, QueryEqualsMember) {
  const PlantedInstance instance = generate_planted_instance(64, 10, 3, 0.5, 2);
  BuildParams params;
  params.k = 3;
  const IndexModel model = build_partition_index(instance.data, params);
  const PartitionLevel& level = model.levels.front();
  const PointId target = level.member_ids[level.member_ids.size() / 2];
  const QueryResult r = search_in_level(instance.data.row(instance.data.row_of(target)).transpose(), level,
                                        instance.data);
  EXPECT_EQ(r.point_id, target);
  EXPECT_EQ(r.projected_distance, 0.0);
}

TEST(SearchInLevel, FullRankMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PointSet data(gaussian_sketch(10, 5, seed));
    const IndexModel model = full_rank_model(data);
    const Vector q = gaussian_sketch(5, 1, 100 + seed).col(0);
    EXPECT_EQ(search_in_level(q, model.levels[0], data).point_id, brute_force_nn(q, data).point_id);
  }
}

TEST(Query, ProbesAllFullRankIsExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PointSet data(gaussian_sketch(80, 6, 40 + seed));
    BuildParams params;
    params.k = 6;
    params.seed = seed;
    const IndexModel model = build_partition_index(data, params);
    QueryParams qp;
    qp.probes = model.levels.size();
    const Vector q = gaussian_sketch(6, 1, 500 + seed).col(0);
    EXPECT_EQ(query(q, model, data, qp).point_id, brute_force_nn(q, data).point_id);
  }
}

TEST(Query, OneProbeExaminesRoutedLevel) {
  const ThreeLevels fx;
  Vector q = Vector::Zero(6);
  q(2) = 1.0;
  const QueryResult r = query(q, fx.model, fx.data);
  EXPECT_EQ(r.level_id, 1u);
  EXPECT_EQ(r.candidates_examined, fx.model.levels[1].member_ids.size());
}

TEST(Query, PlantedNeighborFound) {
  const PlantedInstance instance = generate_planted_instance(256, 32, 8, 0.5, 11);
  BuildParams params;
  params.k = 8;
  const IndexModel model = build_partition_index(instance.data, params);
  EXPECT_EQ(query(instance.query, model, instance.data).point_id, instance.planted_id);
}

TEST(Query, BestDistanceNonIncreasingInProbes) {
  const PointSet data(gaussian_sketch(120, 12, 3));
  BuildParams params;
  params.k = 3;
  const IndexModel model = build_partition_index(data, params);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Vector q = gaussian_sketch(12, 1, 70 + s).col(0);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t probes = 1; probes <= model.levels.size(); ++probes) {
      QueryParams qp;
      qp.probes = probes;
      const double best = query(q, model, data, qp).projected_distance;
      EXPECT_LE(best, previous);
      previous = best;
    }
  }
}

TEST(Query, ProjectionNeverIncreasesDistance) {
  const PointSet data(gaussian_sketch(100, 10, 17));
  BuildParams params;
  params.k = 4;
  const IndexModel model = build_partition_index(data, params);
  QueryParams qp;
  qp.probes = model.levels.size();
  const Vector q = gaussian_sketch(10, 1, 18).col(0);
  for (const QueryResult& r : top_k_search(q, model, data, 100, qp)) {
    EXPECT_GE(r.projected_distance, 0.0);
    EXPECT_LE(r.projected_distance, r.original_distance + 1e-10);
  }
}

TEST(Query, RejectsZeroProbes) {
  const ThreeLevels fx;
  QueryParams qp;
  qp.probes = 0;
  EXPECT_THROW(query(Vector::Zero(6), fx.model, fx.data, qp), Error);
}

TEST(BruteForce, ExactMatchAndTies) {
  DenseMatrix points(3, 2);
  points << 1, 0, -1, 0, 0, 5;
  const PointSet data(points, {7, 3, 9});
  Vector q(2);
  q << 0, 5;
  EXPECT_EQ(brute_force_nn(q, data).point_id, 9);
  EXPECT_EQ(brute_force_nn(q, data).original_distance, 0.0);
  EXPECT_FALSE(brute_force_nn(q, data).level_id.has_value());
  EXPECT_EQ(brute_force_nn(Vector::Zero(2), data).point_id, 3);
}

TEST(BruteForce, MatchesExtendedPrecision) {
  const PointSet data(gaussian_sketch(50, 8, 4));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector q = gaussian_sketch(8, 1, 200 + s).col(0);
    PointId best = -1;
    long double best_distance = std::numeric_limits<long double>::infinity();
    for (Index r = 0; r < data.size(); ++r) {
      long double sum = 0.0L;
      for (Index j = 0; j < 8; ++j) {
        const long double diff = static_cast<long double>(q(j)) - static_cast<long double>(data.points()(r, j));
        sum += diff * diff;
      }
      if (sum < best_distance) {
        best_distance = sum;
        best = data.id(r);
      }
    }
    const QueryResult r = brute_force_nn(q, data);
    EXPECT_EQ(r.point_id, best);
    EXPECT_NEAR(r.original_distance, static_cast<double>(std::sqrt(best_distance)), 1e-12);
  }
}

TEST(TopK, ConsistentWithQuery) {
  const PlantedInstance instance = generate_planted_instance(128, 16, 4, 0.5, 9);
  BuildParams params;
  params.k = 4;
  const IndexModel model = build_partition_index(instance.data, params);
  for (std::size_t probes : {std::size_t{1}, model.levels.size()}) {
    QueryParams qp;
    qp.probes = probes;
    EXPECT_EQ(top_k_search(instance.query, model, instance.data, 1, qp).front(),
              query(instance.query, model, instance.data, qp));
  }
}

TEST(TopK, ReturnsEveryMemberSorted) {
  const ThreeLevels fx;
  Vector q = Vector::Zero(6);
  q(0) = 1.5;
  const auto results = top_k_search(q, fx.model, fx.data, 10);
  ASSERT_EQ(results.size(), 2u);
  EXPECT_EQ(results[0].point_id, 0);
  EXPECT_EQ(results[1].point_id, 1);
  EXPECT_LE(results[0].projected_distance, results[1].projected_distance);
}

TEST(TopK, FullRankAllProbesStartsWithBruteForce) {
  const PlantedInstance instance = generate_planted_instance(256, 32, 8, 0.5, 21);
  BuildParams params;
  params.k = 32;
  const IndexModel model = build_partition_index(instance.data, params);
  QueryParams qp;
  qp.probes = model.levels.size();
  const auto results = top_k_search(instance.query, model, instance.data, 10, qp);
  ASSERT_EQ(results.size(), 10u);
  EXPECT_EQ(results.front().point_id, brute_force_nn(instance.query, instance.data).point_id);
}

TEST(TopK, OriginalMetricRanksByOriginalDistance) {
  const PointSet data(gaussian_sketch(60, 8, 5));
  BuildParams params;
  params.k = 2;
  params.max_levels = 1;
  const IndexModel model = build_partition_index(data, params);
  QueryParams qp;
  qp.metric = MetricSpace::kOriginal;
  const Vector q = gaussian_sketch(8, 1, 6).col(0);
  const auto got = top_k_search(q, model, data, 5, qp);
  const auto want = brute_force_top_k(q, data, 5);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(got[i].point_id, want[i].point_id);
}

TEST(Searcher, MatchesFreeFunctionsAndBatch) {
  const PlantedInstance instance = generate_planted_instance(200, 16, 4, 0.5, 3);
  BuildParams params;
  params.k = 4;
  const IndexModel model = build_partition_index(instance.data, params);
  const Searcher searcher(model, instance.data);
  const DenseMatrix queries = gaussian_sketch(16, 12, 8).transpose();
  QueryParams qp;
  qp.probes = 2;
  const auto batch = searcher.batch_top_k(queries, 5, qp);
  ASSERT_EQ(batch.size(), 12u);
  for (Index i = 0; i < queries.rows(); ++i) {
    const Vector q = queries.row(i).transpose();
    const auto expected = top_k_search(q, model, instance.data, 5, qp);
    ASSERT_EQ(batch[static_cast<std::size_t>(i)].size(), expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      EXPECT_EQ(batch[static_cast<std::size_t>(i)][j].point_id, expected[j].point_id);
      EXPECT_NEAR(batch[static_cast<std::size_t>(i)][j].projected_distance, expected[j].projected_distance, 1e-12);
    }
    EXPECT_EQ(searcher.query(q, qp).point_id, query(q, model, instance.data, qp).point_id);
  }
}

}  // namespace
}  // namespace rssh
