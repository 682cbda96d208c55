#include "rssh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "rssh/error.hpp"

namespace rssh {
namespace {

using ColMatrix = Eigen::MatrixXd;

constexpr double kDropTolerance = 1e-10;
constexpr int kMaxJacobiSweeps = 100;
constexpr int kMaxPowerIterations = 20000;

// Appends the columns of `block` to the orthonormal prefix q[:, 0:kept) by
// classical Gram-Schmidt with one re-orthogonalization pass. Dependent
// columns are skipped. Returns how many columns were appended.
Index append_orthonormal(ColMatrix& q, Index& kept, const ColMatrix& block) {
  Index added = 0;
  Eigen::VectorXd v(q.rows());
  for (Index j = 0; j < block.cols() && kept < q.cols(); ++j) {
    v = block.col(j);
    const double original = v.norm();
    if (!(original > 0.0)) continue;
    for (int pass = 0; pass < 2 && kept > 0; ++pass) {
      const auto basis = q.leftCols(kept);
      v.noalias() -= basis * (basis.transpose() * v);
    }
    const double residual = v.norm();
    if (residual <= kDropTolerance * original) continue;
    q.col(kept++) = v / residual;
    ++added;
  }
  return added;
}

// Fills columns [valid, cols) of m with unit vectors orthogonal to every
// earlier column. Greedy over the standard basis, picking the candidate with
// the largest residual each time.
void complete_orthonormal(ColMatrix& m, Index valid) {
  const Index n = m.rows();
  for (Index col = valid; col < m.cols(); ++col) {
    ColMatrix residual = ColMatrix::Identity(n, n);
    if (col > 0) {
      const auto basis = m.leftCols(col);
      residual.noalias() -= basis * basis.transpose();
    }
    Index best = 0;
    residual.colwise().norm().maxCoeff(&best);
    Eigen::VectorXd v = residual.col(best);
    if (col > 0) {
      const auto basis = m.leftCols(col);
      v.noalias() -= basis * (basis.transpose() * v);
    }
    m.col(col) = v.normalized();
  }
}

void rotate_columns(ColMatrix& m, Index i, Index j, double c, double s) {
  double* x = m.col(i).data();
  double* y = m.col(j).data();
  for (Index r = 0; r < m.rows(); ++r) {
    const double xi = x[r];
    const double yj = y[r];
    x[r] = c * xi - s * yj;
    y[r] = s * xi + c * yj;
  }
}

// Hestenes one-sided Jacobi: rotates the columns of `work` until they are
// mutually orthogonal. On return work_in * rotations == work.
void one_sided_jacobi(ColMatrix& work, ColMatrix& rotations) {
  const Index p = work.cols();
  rotations.setIdentity(p, p);
  const double tol =
      std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<Index>(work.rows(), 16));
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < p; ++i) {
      for (Index j = i + 1; j < p; ++j) {
        const double alpha = work.col(i).squaredNorm();
        const double beta = work.col(j).squaredNorm();
        const double gamma = work.col(i).dot(work.col(j));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::abs(zeta) > 1e150
                             ? 0.5 / zeta
                             : std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_columns(work, i, j, c, s);
        rotate_columns(rotations, i, j, c, s);
      }
    }
    if (!rotated) return;
  }
  throw Error(ErrorCode::kNonConvergence,
              "one-sided Jacobi did not converge in " + std::to_string(kMaxJacobiSweeps) + " sweeps");
}

}  // namespace

void require_finite(const DenseMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFinite, std::string(what) + " contains NaN or Inf");
  }
}

Vector SubspaceBasis::coordinates(const VectorView& p) const {
  if (p.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector length " + std::to_string(p.size()) +
                                                   " vs basis dimension " + std::to_string(dim()));
  }
  return basis.transpose() * p;
}

Vector SubspaceBasis::project(const VectorView& p) const { return basis * coordinates(p); }

int default_krylov_depth(Index rows, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "eta must lie in (0, 1)");
  }
  const double m = static_cast<double>(std::max<Index>(rows, 2));
  const double depth = std::ceil(std::log2(m) / std::sqrt(eta));
  return static_cast<int>(std::clamp(depth, 2.0, 64.0));
}

KrylovParams make_krylov_params(Index k, double eta, Index rows, std::uint64_t seed) {
  return KrylovParams{k, eta, default_krylov_depth(rows, eta), seed};
}

DenseMatrix gaussian_sketch(Index dim, Index k, std::uint64_t seed) {
  if (k < 1 || k > dim) {
    throw Error(ErrorCode::kInvalidDimension,
                "sketch needs 1 <= k <= dim, got k=" + std::to_string(k) + " dim=" + std::to_string(dim));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix sketch(dim, k);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < k; ++j) sketch(i, j) = normal(rng);
  }
  return sketch;
}

DenseMatrix build_krylov_block(const DenseMatrix& a, const DenseMatrix& sketch, int depth) {
  if (sketch.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "sketch has " + std::to_string(sketch.rows()) +
                                                   " rows, A has " + std::to_string(a.cols()) + " columns");
  }
  if (depth < 0) throw Error(ErrorCode::kInvalidParams, "Krylov depth must be non-negative");
  const Index k = sketch.cols();
  DenseMatrix krylov(a.rows(), (depth + 1) * k);
  ColMatrix block = a * sketch;
  krylov.middleCols(0, k) = block;
  for (int j = 1; j <= depth; ++j) {
    block = a * (a.transpose() * block);
    krylov.middleCols(j * k, k) = block;
  }
  return krylov;
}

DenseMatrix orthonormalize(const DenseMatrix& k) {
  require_finite(k, "Krylov block");
  ColMatrix q(k.rows(), std::min(k.rows(), k.cols()));
  Index kept = 0;
  append_orthonormal(q, kept, k);
  if (kept == 0) throw Error(ErrorCode::kZeroMatrix, "all columns are numerically zero");
  return q.leftCols(kept);
}

TruncatedSvd truncated_svd_small(const DenseMatrix& b, Index k) {
  const Index rows = b.rows();
  const Index cols = b.cols();
  if (k < 1) throw Error(ErrorCode::kInvalidParams, "rank must be at least 1");
  if (k > std::min(rows, cols)) {
    throw Error(ErrorCode::kRankTooLarge, "rank " + std::to_string(k) + " exceeds min(" +
                                              std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  require_finite(b, "SVD input");

  // Rotate whichever side has fewer columns. The rotation matrix gives the
  // singular vectors on that side; the rotated columns give the other side
  // scaled by the singular values.
  const bool rotate_rows = rows < cols;
  ColMatrix work = rotate_rows ? ColMatrix(b.transpose()) : ColMatrix(b);
  ColMatrix rotations;
  one_sided_jacobi(work, rotations);

  const Index p = work.cols();
  Eigen::VectorXd sigma = work.colwise().norm();
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sigma(x) > sigma(y); });

  const double largest = sigma(order.front());
  ColMatrix scaled(work.rows(), k);
  ColMatrix unit(p, k);
  TruncatedSvd out;
  out.values.resize(static_cast<std::size_t>(k));
  Index valid = 0;
  for (Index i = 0; i < k; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    const double s = sigma(src);
    out.values[static_cast<std::size_t>(i)] = s;
    unit.col(i) = rotations.col(src);
    if (s > 0.0 && s > largest * 1e-15) {
      scaled.col(i) = work.col(src) / s;
      valid = i + 1;
    }
  }
  complete_orthonormal(scaled, valid);

  if (rotate_rows) {
    out.left = unit;
    out.right = scaled;
  } else {
    out.left = scaled;
    out.right = unit;
  }
  return out;
}

SubspaceBasis block_lanczos(const DenseMatrix& a, const KrylovParams& params) {
  const Index n = a.rows();
  const Index d = a.cols();
  if (params.k < 1 || params.depth < 1 || !(params.eta > 0.0 && params.eta < 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "block Lanczos needs k >= 1, depth >= 1, 0 < eta < 1");
  }
  if (params.k > std::min(n, d)) {
    throw Error(ErrorCode::kRankTooLarge, "rank " + std::to_string(params.k) + " exceeds min(" +
                                              std::to_string(n) + ", " + std::to_string(d) + ")");
  }
  require_finite(a, "block Lanczos input");

  const Index k = params.k;
  const ColMatrix sketch = gaussian_sketch(d, k, params.seed);
  const Index capacity = std::min<Index>(n, (params.depth + 1) * k);

  // Block Lanczos recurrence: each new block is (A A^T) applied to the
  // orthonormalized new directions of the previous block. This spans the same
  // Krylov space as [A S, (A A^T) A S, ...] without the growth in magnitude.
  ColMatrix q(n, capacity);
  Index kept = 0;
  ColMatrix block = a * sketch;
  Index start = 0;
  Index added = append_orthonormal(q, kept, block);
  if (kept == 0) throw Error(ErrorCode::kZeroMatrix, "A * sketch is numerically zero");
  for (int j = 1; j <= params.depth && added > 0 && kept < capacity; ++j) {
    const ColMatrix fresh = q.middleCols(start, added);
    block = a * (a.transpose() * fresh);
    start = kept;
    added = append_orthonormal(q, kept, block);
  }

  const DenseMatrix projected = q.leftCols(kept).transpose() * a;
  const Index rank = std::min(k, kept);
  const TruncatedSvd svd = truncated_svd_small(projected, rank);

  ColMatrix basis(d, k);
  basis.leftCols(rank) = svd.right;
  if (rank < k) complete_orthonormal(basis, rank);

  SubspaceBasis out;
  out.basis = basis;
  out.singular_values = svd.values;
  out.singular_values.resize(static_cast<std::size_t>(k), 0.0);
  return out;
}

namespace {

Eigen::JacobiSVD<ColMatrix> checked_jacobi_svd(const DenseMatrix& a, unsigned options) {
  require_finite(a, "SVD oracle input");
  Eigen::JacobiSVD<ColMatrix> svd(a, options);
  if (options != 0) {
    const ColMatrix rebuilt = svd.matrixU() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();
    const double scale = a.norm();
    if ((rebuilt - a).norm() > 1e-10 * scale + 1e-300) {
      throw Error(ErrorCode::kNonConvergence, "Jacobi SVD reconstruction check failed");
    }
  }
  return svd;
}

}  // namespace

SubspaceBasis exact_svd_oracle(const DenseMatrix& a, Index k) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    throw Error(ErrorCode::kRankTooLarge, "oracle rank " + std::to_string(k) + " out of range");
  }
  const auto svd = checked_jacobi_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SubspaceBasis out;
  out.basis = svd.matrixV().leftCols(k);
  const Eigen::VectorXd& values = svd.singularValues();
  out.singular_values.assign(values.data(), values.data() + k);
  return out;
}

std::vector<double> exact_singular_values(const DenseMatrix& a) {
  const auto svd = checked_jacobi_svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& values = svd.singularValues();
  return {values.data(), values.data() + values.size()};
}

double spectral_norm(const DenseMatrix& a) {
  require_finite(a, "spectral norm input");
  if (a.size() == 0 || a.isZero(0.0)) return 0.0;

  const bool tall = a.rows() >= a.cols();
  const Index side = tall ? a.cols() : a.rows();
  Eigen::VectorXd v = ColMatrix(gaussian_sketch(side, 1, 0x5eedULL)).col(0).normalized();
  Eigen::VectorXd w(side);
  double previous = 0.0;
  for (int it = 0; it < kMaxPowerIterations; ++it) {
    w = tall ? Eigen::VectorXd(a.transpose() * (a * v)) : Eigen::VectorXd(a * (a.transpose() * v));
    const double theta = v.dot(w);
    const double length = w.norm();
    if (length == 0.0) return 0.0;
    const double residual = (w - theta * v).norm();
    v = w / length;
    if (residual <= 1e-13 * theta || std::abs(theta - previous) <= 1e-16 * theta) break;
    previous = theta;
  }
  return tall ? (a * v).norm() : (a.transpose() * v).norm();
}

DenseMatrix projection_residual(const DenseMatrix& a, const SubspaceBasis& basis) {
  if (a.cols() != basis.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix columns do not match basis dimension");
  }
  return a - (a * basis.basis) * basis.basis.transpose();
}

}  // namespace rssh
