#include "amgs/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace amgs {

NonPositiveDiagonal::NonPositiveDiagonal(Index index, double value,
                                         const std::string& what)
    : std::domain_error(what), index_(index), value_(value) {}

SparseMatrix::SparseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), row_offsets_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      std::ostringstream os;
      os << "triplet (" << t.row << ", " << t.col << ") outside " << rows
         << "x" << cols << " matrix";
      throw DimensionError(os.str());
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });

  SparseMatrix out(rows, cols);
  out.col_indices_.reserve(triplets.size());
  out.values_.reserve(triplets.size());
  Index k = 0;
  for (Index r = 0; r < rows; ++r) {
    while (k < triplets.size() && triplets[k].row == r) {
      const Index c = triplets[k].col;
      double sum = 0.0;
      while (k < triplets.size() && triplets[k].row == r &&
             triplets[k].col == c) {
        sum += triplets[k].value;
        ++k;
      }
      if (sum != 0.0) {
        out.col_indices_.push_back(c);
        out.values_.push_back(sum);
      }
    }
    out.row_offsets_[r + 1] = out.values_.size();
  }
  return out;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  SparseMatrix out(static_cast<Index>(dense.rows()),
                   static_cast<Index>(dense.cols()));
  for (Index r = 0; r < out.rows_; ++r) {
    for (Index c = 0; c < out.cols_; ++c) {
      const double v = dense(static_cast<Eigen::Index>(r),
                             static_cast<Eigen::Index>(c));
      if (v != 0.0) {
        out.col_indices_.push_back(c);
        out.values_.push_back(v);
      }
    }
    out.row_offsets_[r + 1] = out.values_.size();
  }
  return out;
}

SparseMatrix SparseMatrix::from_csr(Index rows, Index cols,
                                    std::vector<Index> row_offsets,
                                    std::vector<Index> col_indices,
                                    std::vector<double> values) {
  if (row_offsets.size() != rows + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != values.size() ||
      col_indices.size() != values.size()) {
    throw DimensionError("inconsistent CSR arrays");
  }
  for (Index r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1]) {
      throw DimensionError("row offsets must be non-decreasing");
    }
    for (Index p = row_offsets[r]; p < row_offsets[r + 1]; ++p) {
      if (col_indices[p] >= cols) {
        throw DimensionError("column index out of range");
      }
      if (p > row_offsets[r] && col_indices[p] <= col_indices[p - 1]) {
        throw DimensionError("column indices must be strictly increasing");
      }
      if (values[p] == 0.0) {
        throw DimensionError("explicit zero stored in CSR input");
      }
    }
  }
  SparseMatrix out;
  out.rows_ = rows;
  out.cols_ = cols;
  out.row_offsets_ = std::move(row_offsets);
  out.col_indices_ = std::move(col_indices);
  out.values_ = std::move(values);
  return out;
}

double SparseMatrix::coeff(Index row, Index col) const {
  if (row >= rows_ || col >= cols_) {
    throw DimensionError("coefficient index out of range");
  }
  const auto cols = row_cols(row);
  const auto it = std::lower_bound(cols.begin(), cols.end(), col);
  if (it == cols.end() || *it != col) {
    return 0.0;
  }
  return values_[row_offsets_[row] + static_cast<Index>(it - cols.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(rows_),
                            static_cast<Eigen::Index>(cols_));
  for (Index r = 0; r < rows_; ++r) {
    for (Index p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      out(static_cast<Eigen::Index>(r),
          static_cast<Eigen::Index>(col_indices_[p])) = values_[p];
    }
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix out(cols_, rows_);
  out.col_indices_.resize(nnz());
  out.values_.resize(nnz());
  for (Index c : col_indices_) {
    ++out.row_offsets_[c + 1];
  }
  for (Index c = 0; c < cols_; ++c) {
    out.row_offsets_[c + 1] += out.row_offsets_[c];
  }
  std::vector<Index> cursor(out.row_offsets_.begin(),
                            out.row_offsets_.end() - 1);
  // Rows are visited in order, so each transposed row stays sorted.
  for (Index r = 0; r < rows_; ++r) {
    for (Index p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
      const Index dst = cursor[col_indices_[p]]++;
      out.col_indices_[dst] = r;
      out.values_[dst] = values_[p];
    }
  }
  return out;
}

Vector spmv(const SparseMatrix& a, const Vector& x) {
  if (static_cast<Index>(x.size()) != a.cols()) {
    std::ostringstream os;
    os << "spmv: matrix has " << a.cols() << " columns but vector has "
       << x.size() << " entries";
    throw DimensionError(os.str());
  }
  Vector y(static_cast<Eigen::Index>(a.rows()));
  for (Index r = 0; r < a.rows(); ++r) {
    y[static_cast<Eigen::Index>(r)] = a.row_dot(r, x.data());
  }
  return y;
}

BlockDiagInverseMass::BlockDiagInverseMass(Index dof_per_body,
                                           std::vector<Matrix> inv_blocks)
    : dof_(dof_per_body), blocks_(std::move(inv_blocks)) {
  if (dof_ == 0) {
    throw DimensionError("dof_per_body must be positive");
  }
  const auto dof = static_cast<Eigen::Index>(dof_);
  for (Index b = 0; b < blocks_.size(); ++b) {
    const Matrix& blk = blocks_[b];
    if (blk.rows() != dof || blk.cols() != dof) {
      throw DimensionError("inverse mass block " + std::to_string(b) +
                           " has the wrong shape");
    }
    const double scale = std::max(1.0, blk.cwiseAbs().maxCoeff());
    if ((blk - blk.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("inverse mass block " + std::to_string(b) +
                                  " is not symmetric");
    }
    for (Eigen::Index d = 0; d < dof; ++d) {
      if (blk(d, d) < 0.0) {
        throw std::invalid_argument("inverse mass block " +
                                    std::to_string(b) +
                                    " has a negative diagonal entry");
      }
    }
  }
}

BlockDiagInverseMass BlockDiagInverseMass::from_diagonals(
    Index dof_per_body, const std::vector<Vector>& diags) {
  std::vector<Matrix> blocks;
  blocks.reserve(diags.size());
  for (const Vector& d : diags) {
    if (static_cast<Index>(d.size()) != dof_per_body) {
      throw DimensionError("inverse mass diagonal has the wrong length");
    }
    blocks.emplace_back(d.asDiagonal());
  }
  return BlockDiagInverseMass(dof_per_body, std::move(blocks));
}

Vector BlockDiagInverseMass::apply(const Vector& x) const {
  if (static_cast<Index>(x.size()) != dim()) {
    throw DimensionError("inverse mass apply: dimension mismatch");
  }
  Vector y(x.size());
  const auto dof = static_cast<Eigen::Index>(dof_);
  for (Index b = 0; b < blocks_.size(); ++b) {
    const auto off = static_cast<Eigen::Index>(b) * dof;
    y.segment(off, dof) = blocks_[b] * x.segment(off, dof);
  }
  return y;
}

Matrix BlockDiagInverseMass::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dim());
  const auto dof = static_cast<Eigen::Index>(dof_);
  Matrix out = Matrix::Zero(n, n);
  for (Index b = 0; b < blocks_.size(); ++b) {
    const auto off = static_cast<Eigen::Index>(b) * dof;
    out.block(off, off, dof, dof) = blocks_[b];
  }
  return out;
}

SparseMatrix build_mhat(const SparseMatrix& jacobian,
                        const BlockDiagInverseMass& inv_mass) {
  if (jacobian.cols() != inv_mass.dim()) {
    std::ostringstream os;
    os << "build_mhat: J has " << jacobian.cols()
       << " columns but the inverse mass has dimension " << inv_mass.dim();
    throw DimensionError(os.str());
  }
  const Index dof = inv_mass.dof_per_body();
  // Column i of M^-1 J^T touches only the bodies that row i of J touches.
  std::vector<Triplet> transposed;
  transposed.reserve(jacobian.nnz() * dof);
  Vector local(static_cast<Eigen::Index>(dof));
  for (Index i = 0; i < jacobian.rows(); ++i) {
    const auto cols = jacobian.row_cols(i);
    const auto vals = jacobian.row_values(i);
    Index p = 0;
    while (p < cols.size()) {
      const Index body = cols[p] / dof;
      local.setZero();
      while (p < cols.size() && cols[p] / dof == body) {
        local[static_cast<Eigen::Index>(cols[p] % dof)] = vals[p];
        ++p;
      }
      const Vector out = inv_mass.block(body) * local;
      for (Index d = 0; d < dof; ++d) {
        const double v = out[static_cast<Eigen::Index>(d)];
        if (v != 0.0) {
          transposed.push_back({i, body * dof + d, v});
        }
      }
    }
  }
  return SparseMatrix::from_triplets(jacobian.rows(), jacobian.cols(),
                                     std::move(transposed))
      .transpose();
}

Matrix TriangularSplit::reconstruct() const {
  Matrix a = -lower.to_dense() - upper.to_dense();
  a.diagonal() += diag;
  return a;
}

TriangularSplit split_dlu(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("split_dlu: matrix is not square");
  }
  const auto m = a.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(a(i, i) > 0.0)) {
      std::ostringstream os;
      os << "split_dlu: diagonal entry " << i << " is " << a(i, i)
         << ", expected a positive value";
      throw NonPositiveDiagonal(static_cast<Index>(i), a(i, i), os.str());
    }
  }
  Matrix lower = Matrix::Zero(m, m);
  Matrix upper = Matrix::Zero(m, m);
  lower.triangularView<Eigen::StrictlyLower>() = -a;
  upper.triangularView<Eigen::StrictlyUpper>() = -a;
  return {a.diagonal(), SparseMatrix::from_dense(lower),
          SparseMatrix::from_dense(upper)};
}

namespace {

template <typename Apply, typename ApplyT>
NormEstimate power_iterate(Index cols, Apply apply, ApplyT apply_t, double tol,
                           Index max_iter) {
  if (cols == 0) {
    throw DimensionError("spectral_norm: empty matrix");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("spectral_norm: tol must be positive");
  }
  Vector v = Vector::Ones(static_cast<Eigen::Index>(cols));
  v /= v.norm();
  NormEstimate est;
  double sigma = 0.0;
  for (Index it = 1; it <= max_iter; ++it) {
    const Vector xv = apply(v);
    const double next = xv.norm();
    Vector w = apply_t(xv);
    const double wn = w.norm();
    est.iterations = it;
    if (wn == 0.0) {
      // v is in the null space of X^T X; the current estimate is exact for
      // this Krylov space.
      est.value = next;
      est.converged = true;
      return est;
    }
    if (it > 1 && std::abs(next - sigma) <= tol * next) {
      est.value = next;
      est.converged = true;
      return est;
    }
    sigma = next;
    v = w / wn;
  }
  est.value = sigma;
  est.converged = false;
  return est;
}

}  // namespace

NormEstimate spectral_norm(const Matrix& x, double tol, Index max_iter) {
  if (x.size() == 0) {
    throw DimensionError("spectral_norm: empty matrix");
  }
  return power_iterate(
      static_cast<Index>(x.cols()), [&](const Vector& v) -> Vector { return x * v; },
      [&](const Vector& v) -> Vector { return x.transpose() * v; }, tol,
      max_iter);
}

NormEstimate spectral_norm(const SparseMatrix& x, double tol, Index max_iter) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw DimensionError("spectral_norm: empty matrix");
  }
  const SparseMatrix xt = x.transpose();
  return power_iterate(
      x.cols(), [&](const Vector& v) { return spmv(x, v); },
      [&](const Vector& v) { return spmv(xt, v); }, tol, max_iter);
}

}  // namespace amgs
