#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace amgs {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a diagonal entry that must be positive is not. `index()` is
// zero-based.
class NonPositiveDiagonal : public std::domain_error {
 public:
  NonPositiveDiagonal(Index index, double value, const std::string& what);
  Index index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  Index index_;
  double value_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Row-compressed real sparse matrix.
///
/// Column indices are strictly increasing within each row and exact zeros are
/// never stored. Instances are immutable once built.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);

  /// Duplicate coordinates are summed; entries that end up exactly zero are
  /// dropped.
  static SparseMatrix from_triplets(Index rows, Index cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const Matrix& dense);
  /// Validates the compressed arrays and rejects explicitly stored zeros.
  static SparseMatrix from_csr(Index rows, Index cols,
                               std::vector<Index> row_offsets,
                               std::vector<Index> col_indices,
                               std::vector<double> values);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return values_.size(); }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> row_cols(Index row) const noexcept {
    return {col_indices_.data() + row_offsets_[row],
            row_offsets_[row + 1] - row_offsets_[row]};
  }
  std::span<const double> row_values(Index row) const noexcept {
    return {values_.data() + row_offsets_[row],
            row_offsets_[row + 1] - row_offsets_[row]};
  }

  // Hot path for the sweeps; no bounds checks.
  double row_dot(Index row, const double* x) const noexcept {
    double sum = 0.0;
    for (Index p = row_offsets_[row]; p < row_offsets_[row + 1]; ++p) {
      sum += values_[p] * x[col_indices_[p]];
    }
    return sum;
  }
  void add_scaled_row(Index row, double scale, double* y) const noexcept {
    for (Index p = row_offsets_[row]; p < row_offsets_[row + 1]; ++p) {
      y[col_indices_[p]] += scale * values_[p];
    }
  }

  double coeff(Index row, Index col) const;
  Matrix to_dense() const;
  SparseMatrix transpose() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

Vector spmv(const SparseMatrix& a, const Vector& x);

/// Block-diagonal inverse generalized mass matrix, one dof x dof block per
/// body. Static bodies carry the zero block.
class BlockDiagInverseMass {
 public:
  BlockDiagInverseMass() = default;
  BlockDiagInverseMass(Index dof_per_body, std::vector<Matrix> inv_blocks);

  static BlockDiagInverseMass from_diagonals(Index dof_per_body,
                                             const std::vector<Vector>& diags);

  Index body_count() const noexcept { return blocks_.size(); }
  Index dof_per_body() const noexcept { return dof_; }
  Index dim() const noexcept { return dof_ * blocks_.size(); }
  const Matrix& block(Index body) const { return blocks_.at(body); }

  Vector apply(const Vector& x) const;
  Matrix to_dense() const;

 private:
  Index dof_ = 0;
  std::vector<Matrix> blocks_;
};

/// M^-1 J^T as an n x m sparse matrix.
SparseMatrix build_mhat(const SparseMatrix& jacobian,
                        const BlockDiagInverseMass& inv_mass);

/// A = D - L - U with L strictly lower and U strictly upper.
struct TriangularSplit {
  Vector diag;
  SparseMatrix lower;
  SparseMatrix upper;

  Matrix reconstruct() const;
};

TriangularSplit split_dlu(const Matrix& a);

struct NormEstimate {
  double value = 0.0;
  Index iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration on X^T X, started from the
/// normalized all-ones vector.
NormEstimate spectral_norm(const Matrix& x, double tol = 1e-10,
                           Index max_iter = 10000);
NormEstimate spectral_norm(const SparseMatrix& x, double tol = 1e-10,
                           Index max_iter = 10000);

}  // namespace amgs
