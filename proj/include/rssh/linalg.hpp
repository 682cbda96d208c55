#pragma once

// Dense kernels and the randomized block Krylov (block Lanczos) low-rank
// approximation used to fit one subspace per partition level.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rssh {

using Index = Eigen::Index;

/// Row-major dense matrix of doubles. Points are stored one per row.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using VectorView = Eigen::Ref<const Eigen::VectorXd>;

/// Throws ErrorCode::kNonFinite if any entry is NaN or infinite.
void require_finite(const DenseMatrix& m, const char* what);

/// A dim x k basis with orthonormal columns spanning an approximate top-k
/// right singular subspace, plus the matching singular value estimates.
struct SubspaceBasis {
  DenseMatrix basis;
  std::vector<double> singular_values;

  Index dim() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }

  /// Coordinates of p in the basis, i.e. V^T p.
  Vector coordinates(const VectorView& p) const;
  /// Orthogonal projection V V^T p.
  Vector project(const VectorView& p) const;

  bool operator==(const SubspaceBasis&) const = default;
};

struct KrylovParams {
  Index k = 1;
  double eta = 0.1;
  /// Number of (A A^T) multiplications after the first block.
  int depth = 2;
  std::uint64_t seed = 0;
};

/// ceil(log2(max(rows, 2)) / sqrt(eta)) clamped to [2, 64].
int default_krylov_depth(Index rows, double eta);

KrylovParams make_krylov_params(Index k, double eta, Index rows, std::uint64_t seed);

/// dim x k matrix of i.i.d. standard normal draws, reproducible per seed.
DenseMatrix gaussian_sketch(Index dim, Index k, std::uint64_t seed);

/// K = [A S, (A A^T) A S, ..., (A A^T)^depth A S], formed by repeated
/// products. Entries grow like sigma_1^(2 depth + 1); block_lanczos uses a
/// normalized recurrence instead.
DenseMatrix build_krylov_block(const DenseMatrix& a, const DenseMatrix& sketch, int depth);

/// Orthonormal basis for the column span of k. Columns whose residual after
/// projection falls below 1e-10 of their original norm are dropped, so the
/// result may have fewer columns than the input.
DenseMatrix orthonormalize(const DenseMatrix& k);

struct TruncatedSvd {
  DenseMatrix left;    // rows(B) x k
  std::vector<double> values;
  DenseMatrix right;   // cols(B) x k
};

/// Rank-k SVD of a small matrix by one-sided Jacobi rotations.
TruncatedSvd truncated_svd_small(const DenseMatrix& b, Index k);

/// Randomized block Krylov approximation of the top-k right singular
/// subspace of A (ambient dimension = A.cols()).
SubspaceBasis block_lanczos(const DenseMatrix& a, const KrylovParams& params);

/// Deterministic full SVD (two-sided Jacobi) truncated to rank k. Ground
/// truth for tests and the svd-check command; not used when building.
SubspaceBasis exact_svd_oracle(const DenseMatrix& a, Index k);

/// Full singular spectrum, descending, from the same decomposition as
/// exact_svd_oracle.
std::vector<double> exact_singular_values(const DenseMatrix& a);

/// Largest singular value by power iteration on the smaller Gram matrix.
double spectral_norm(const DenseMatrix& a);

/// A - A V V^T for a row-space basis V.
DenseMatrix projection_residual(const DenseMatrix& a, const SubspaceBasis& basis);

}  // namespace rssh
