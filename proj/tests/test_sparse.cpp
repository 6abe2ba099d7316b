#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "amgs/matrix_market.hpp"
#include "amgs/sparse.hpp"
#include "test_support.hpp"

using namespace amgs;

namespace {

SparseMatrix random_sparse(std::mt19937_64& rng, Index rows, Index cols, double fill) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(fill);
  std::vector<Triplet> t;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (keep(rng)) {
        t.push_back({i, j, u(rng)});
      }
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

// Largest singular value via an independent SVD.
double svd_norm(const Matrix& x) {
  return Eigen::JacobiSVD<Matrix>(x).singularValues()(0);
}

}  // namespace

TEST(SparseMatrix, TripletsSumDuplicatesAndDropZeros) {
  const auto a = SparseMatrix::from_triplets(
      2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, -1.0}, {1, 1, 3.0}, {1, 1, 0.5}});
  EXPECT_EQ(a.nnz(), 2u);
  EXPECT_EQ(a.coeff(0, 0), 2.0);
  EXPECT_EQ(a.coeff(0, 2), 0.0);
  EXPECT_EQ(a.coeff(1, 1), 3.5);
}

TEST(SparseMatrix, CsrInvariantsHoldOnRandomInput) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_sparse(rng, 1 + trial, 3 + trial, 0.3);
    const auto offs = a.row_offsets();
    ASSERT_EQ(offs.size(), a.rows() + 1);
    EXPECT_EQ(offs.back(), a.nnz());
    for (Index r = 0; r < a.rows(); ++r) {
      EXPECT_LE(offs[r], offs[r + 1]);
      const auto cols = a.row_cols(r);
      for (Index k = 0; k < cols.size(); ++k) {
        EXPECT_LT(cols[k], a.cols());
        if (k > 0) {
          EXPECT_LT(cols[k - 1], cols[k]);
        }
      }
    }
    for (double v : a.values()) {
      EXPECT_NE(v, 0.0);
    }
  }
}

TEST(SparseMatrix, FromCsrRejectsBadInput) {
  EXPECT_THROW(SparseMatrix::from_csr(1, 2, {0, 1}, {0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix::from_csr(1, 2, {0, 2}, {1, 0}, {1.0, 2.0}),
               std::invalid_argument);
  EXPECT_THROW(SparseMatrix::from_csr(1, 2, {0, 1}, {2}, {1.0}), std::invalid_argument);
  EXPECT_NO_THROW(SparseMatrix::from_csr(1, 2, {0, 2}, {0, 1}, {1.0, 2.0}));
}

TEST(SparseMatrix, TransposeMatchesDense) {
  std::mt19937_64 rng(3);
  const auto a = random_sparse(rng, 7, 5, 0.4);
  EXPECT_EQ(a.transpose().to_dense(), a.to_dense().transpose());
}

TEST(Spmv, Examples) {
  const Vector x = Eigen::Vector3d(1, 2, 3);
  EXPECT_EQ(spmv(SparseMatrix::from_dense(Matrix::Identity(3, 3)), x), x);
  EXPECT_EQ(spmv(SparseMatrix(4, 3), x), Vector::Zero(4));
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  EXPECT_EQ(spmv(SparseMatrix::from_dense(a), Eigen::Vector2d(1, 1)), Eigen::Vector2d(3, 3));
}

TEST(Spmv, DimensionMismatchThrows) {
  EXPECT_THROW(spmv(SparseMatrix(2, 3), Vector::Zero(2)), DimensionError);
}

TEST(Spmv, MatchesDenseProduct) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_sparse(rng, 9, 13, 0.25);
    const Vector x = fixtures::random_vector(rng, 13);
    EXPECT_LE((spmv(a, x) - a.to_dense() * x).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(BlockDiagInverseMass, ValidatesBlocks) {
  Matrix asym(3, 3);
  asym << 1, 0.5, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_THROW(BlockDiagInverseMass(3, {asym}), std::invalid_argument);
  EXPECT_THROW(BlockDiagInverseMass(3, {Matrix::Identity(2, 2)}), DimensionError);
  const auto m = BlockDiagInverseMass::from_diagonals(3, {Vector::Ones(3), Vector::Zero(3)});
  EXPECT_EQ(m.dim(), 6u);
  EXPECT_EQ(m.body_count(), 2u);
}

TEST(BuildMhat, SingleBodyExample) {
  const auto j = SparseMatrix::from_triplets(1, 3, {{0, 1, -1.0}});
  const auto minv = BlockDiagInverseMass::from_diagonals(3, {Eigen::Vector3d(0.5, 0.5, 7.0)});
  const Matrix mhat = build_mhat(j, minv).to_dense();
  ASSERT_EQ(mhat.rows(), 3);
  ASSERT_EQ(mhat.cols(), 1);
  EXPECT_EQ(mhat(0, 0), 0.0);
  EXPECT_EQ(mhat(1, 0), -0.5);
  EXPECT_EQ(mhat(2, 0), 0.0);
}

TEST(BuildMhat, StaticBodiesGiveZero) {
  const auto j = SparseMatrix::from_triplets(2, 6, {{0, 1, 1.0}, {1, 3, 2.0}, {1, 5, 1.0}});
  const auto minv = BlockDiagInverseMass::from_diagonals(3, {Vector::Zero(3), Vector::Zero(3)});
  const auto mhat = build_mhat(j, minv);
  EXPECT_EQ(mhat.nnz(), 0u);
  EXPECT_EQ(mhat.rows(), 6u);
  EXPECT_EQ(mhat.cols(), 2u);
}

TEST(BuildMhat, DimensionMismatchThrows) {
  const auto minv = BlockDiagInverseMass::from_diagonals(3, {Vector::Ones(3)});
  EXPECT_THROW(build_mhat(SparseMatrix(1, 4), minv), DimensionError);
}

TEST(BuildMhat, MatchesDenseProductAndNnzBound) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(1, 20);
  for (int trial = 0; trial < 40; ++trial) {
    const Index bodies = static_cast<Index>(size(rng));
    const Index m = static_cast<Index>(3 * size(rng));
    const auto j = random_sparse(rng, m, 3 * bodies, 0.2);
    std::vector<Matrix> blocks;
    for (Index b = 0; b < bodies; ++b) {
      if (trial % 2 == 0) {
        blocks.push_back(fixtures::random_vector(rng, 3, 0.1, 2.0).asDiagonal());
      } else {
        Matrix r = fixtures::random_spd(rng, 3);
        blocks.push_back(r);
      }
    }
    const BlockDiagInverseMass minv(3, blocks);
    const auto mhat = build_mhat(j, minv);
    const Matrix dense = minv.to_dense() * j.to_dense().transpose();
    EXPECT_LE((mhat.to_dense() - dense).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE(mhat.nnz(), 3 * j.nnz());
  }
}

TEST(SplitDlu, Example) {
  Matrix a(2, 2);
  a << 2, -1, -1, 2;
  const auto s = split_dlu(a);
  EXPECT_EQ(s.diag, Eigen::Vector2d(2, 2));
  Matrix l(2, 2), u(2, 2);
  l << 0, 0, 1, 0;
  u << 0, 1, 0, 0;
  EXPECT_EQ(s.lower.to_dense(), l);
  EXPECT_EQ(s.upper.to_dense(), u);
  EXPECT_EQ(s.reconstruct(), a);
}

TEST(SplitDlu, DiagonalHasEmptyTriangles) {
  const auto s = split_dlu(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix());
  EXPECT_EQ(s.lower.nnz(), 0u);
  EXPECT_EQ(s.upper.nnz(), 0u);
}

TEST(SplitDlu, ZeroDiagonalReportsIndex) {
  Matrix a(2, 2);
  a << 0, 1, 1, 2;
  try {
    split_dlu(a);
    FAIL() << "expected NonPositiveDiagonal";
  } catch (const NonPositiveDiagonal& e) {
    EXPECT_EQ(e.index(), 0u);
    EXPECT_EQ(e.value(), 0.0);
  }
}

TEST(SplitDlu, ReconstructionIsExact) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = fixtures::random_spd(rng, 1 + trial % 9);
    EXPECT_EQ(split_dlu(a).reconstruct(), a);
  }
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Matrix(Eigen::Vector3d(1, -3, 2).asDiagonal())).value, 3.0, 1e-9);
  Matrix n(2, 2);
  n << 0, 1, 0, 0;
  EXPECT_NEAR(spectral_norm(n).value, 1.0, 1e-9);
  Matrix a(2, 2);
  a << 2, -1, -1, 2;
  const auto s = split_dlu(a);
  Matrix dl = -s.lower.to_dense();
  dl.diagonal() += s.diag;
  const Matrix x = dl.triangularView<Eigen::Lower>().solve(s.upper.to_dense());
  EXPECT_NEAR(spectral_norm(x).value, std::sqrt(5.0) / 4.0, 1e-9);
}

TEST(SpectralNorm, SparseAndDenseAgree) {
  std::mt19937_64 rng(29);
  const auto a = random_sparse(rng, 12, 8, 0.3);
  EXPECT_NEAR(spectral_norm(a).value, spectral_norm(a.to_dense()).value, 1e-12);
}

TEST(SpectralNorm, BoundsRandomDirectionsAndMatchesSvd) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 2;
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = g(rng);
    }
    const auto est = spectral_norm(x, 1e-12, 100000);
    EXPECT_TRUE(est.converged);
    EXPECT_NEAR(est.value, svd_norm(x), 1e-6 * svd_norm(x));
    for (int k = 0; k < 100; ++k) {
      Vector v(x.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = g(rng);
      }
      v.normalize();
      EXPECT_GE(est.value * (1 + 1e-9), (x * v).norm());
    }
  }
}

TEST(SpectralNorm, ReportsNonConvergence) {
  std::mt19937_64 rng(37);
  const Matrix x = fixtures::random_spd(rng, 30, 0.0);
  const auto est = spectral_norm(x, 1e-15, 2);
  EXPECT_FALSE(est.converged);
  EXPECT_GT(est.value, 0.0);
}

TEST(MatrixMarket, CoordinateRoundTrip) {
  std::mt19937_64 rng(41);
  const auto a = random_sparse(rng, 6, 9, 0.3);
  std::stringstream ss;
  mm::write_coordinate(ss, a);
  EXPECT_EQ(ss.str().rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
  const auto b = mm::read_coordinate(ss);
  EXPECT_EQ(b.to_dense(), a.to_dense());
}

TEST(MatrixMarket, OneBasedAndSymmetricExpansion) {
  std::stringstream ss(
      "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 -1\n");
  const Matrix a = mm::read_coordinate(ss).to_dense();
  Matrix expected(2, 2);
  expected << 4, -1, -1, 0;
  EXPECT_EQ(a, expected);
}

TEST(MatrixMarket, ArrayAndVectorRoundTrip) {
  std::mt19937_64 rng(43);
  const Matrix a = fixtures::random_spd(rng, 4);
  std::stringstream s1;
  mm::write_array(s1, a);
  EXPECT_EQ(mm::read_array(s1), a);
  Vector v = fixtures::random_vector(rng, 5);
  v[2] = std::numeric_limits<double>::infinity();
  std::stringstream s2;
  mm::write_vector(s2, v);
  EXPECT_EQ(mm::read_vector(s2), v);
}

TEST(MatrixMarket, MalformedInputThrows) {
  std::stringstream bad_header("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1\n");
  EXPECT_THROW(mm::read_coordinate(bad_header), mm::FormatError);
  std::stringstream out_of_range("%%MatrixMarket matrix coordinate real general\n1 1 1\n2 1 1\n");
  EXPECT_THROW(mm::read_coordinate(out_of_range), mm::FormatError);
  std::stringstream truncated("%%MatrixMarket matrix array real general\n2 1\n1\n");
  EXPECT_THROW(mm::read_array(truncated), mm::FormatError);
}
