#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "amgs/certificate.hpp"
#include "amgs/contact.hpp"
#include "amgs/problem_io.hpp"
#include "test_support.hpp"

using namespace amgs;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One dynamic circle (mass 2, r 0.21) on a static floor; only the circle's
// dofs appear in J.
ContactLcp resting_circle(double vy) {
  const double inv_i = 1.0 / (0.5 * 2.0 * 0.21 * 0.21);
  const auto j = SparseMatrix::from_triplets(1, 3, {{0, 1, 1.0}});
  return ContactLcp(j, BlockDiagInverseMass::from_diagonals(3, {Eigen::Vector3d(0.5, 0.5, inv_i)}),
                    Eigen::Vector3d(0, vy, 0), Vector::Zero(1));
}

ContactLcp one_by_one_contact() {
  // A = [[2]], q = [-4]
  const auto j = SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}});
  return ContactLcp(j, BlockDiagInverseMass::from_diagonals(1, {Vector::Constant(1, 2.0)}),
                    Vector::Constant(1, -4.0), Vector::Zero(1));
}

SolverConfig iterations(Index n, double tol = 0.0) {
  SolverConfig cfg;
  cfg.max_iterations = n;
  cfg.residual_tol = tol;
  return cfg;
}

// Random contact problem: `bodies` bodies with 3 dofs, rows touching two
// random bodies (or one when `b` is static-like), random inverse masses.
ContactLcp random_contact(std::mt19937_64& rng, Index bodies, Index rows) {
  std::uniform_int_distribution<Index> pick(0, bodies - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Triplet> t;
  for (Index r = 0; r < rows; ++r) {
    const Index a = pick(rng);
    Index b = pick(rng);
    for (Index k = 0; k < 3; ++k) {
      t.push_back({r, 3 * a + k, u(rng)});
      if (b != a) {
        t.push_back({r, 3 * b + k, u(rng)});
      }
    }
  }
  std::vector<Vector> diags;
  for (Index b = 0; b < bodies; ++b) {
    diags.push_back(fixtures::random_vector(rng, 3, 0.2, 2.0));
  }
  return ContactLcp(SparseMatrix::from_triplets(rows, 3 * bodies, std::move(t)),
                    BlockDiagInverseMass::from_diagonals(3, diags),
                    fixtures::random_vector(rng, 3 * bodies), fixtures::random_vector(rng, rows));
}

}  // namespace

TEST(ContactLcp, DiagonalAndDensify) {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_contact(rng, 5, 8);
    const Matrix j = p.jacobian().to_dense();
    const Matrix a = j * p.inv_mass().to_dense() * j.transpose();
    const auto dense = p.densify();
    EXPECT_LE((dense.a() - a).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((dense.q() - (j * p.velocity() + p.bias())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((p.a_diag() - a.diagonal()).cwiseAbs().maxCoeff(), 1e-12);
    const Vector lambda = fixtures::random_vector(rng, 8, 0.0, 1.0);
    EXPECT_LE((p.constraint_velocity(lambda) - dense.velocity(lambda)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(ContactLcp, DegenerateRowReportsIndex) {
  const auto j = SparseMatrix::from_triplets(2, 6, {{0, 1, 1.0}, {1, 4, 1.0}});
  const auto minv =
      BlockDiagInverseMass::from_diagonals(3, {Vector::Ones(3), Vector::Zero(3)});
  try {
    ContactLcp(j, minv, Vector::Zero(6), Vector::Zero(2));
    FAIL() << "expected NonPositiveDiagonal";
  } catch (const NonPositiveDiagonal& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(AmgsContact, SingleContactMatchesDense) {
  const auto p = resting_circle(-0.1634);
  const auto sparse = amgs_contact_solve(p, Vector::Zero(1), iterations(1));
  const auto dense = amgs_dense_solve(p.densify(), Vector::Zero(1), iterations(1));
  EXPECT_EQ(sparse.lambda, dense.lambda);
  EXPECT_NEAR(sparse.lambda[0], 2.0 * 0.1634, 1e-12);
}

TEST(AmgsContact, OracleSolutionIsFixedPoint) {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 30; ++trial) {
    const LcpProblem dense(fixtures::random_spd(rng, 6), fixtures::random_vector(rng, 6));
    const auto p = fixtures::factor_as_contact(dense);
    const auto ref = oracle_solve(dense);
    const auto s = amgs_contact_solve(p, ref.lambda, iterations(1));
    EXPECT_LE((s.lambda - ref.lambda).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(p.residual(s.lambda), 1e-9);
  }
}

TEST(AmgsContact, RandomPileMatchesDenseForHundredSweeps) {
  const auto step = fixtures::random_pile_problem(5, 20, 40, 2.0);
  const auto& p = step.lcp.problem;
  ASSERT_GT(p.rows(), 5u);
  const auto dense_prob = p.densify();
  ContactAmgs sparse(p, step.lambda0, SolverConfig{});
  DenseAmgs dense(dense_prob, step.lambda0, SolverConfig{});
  for (int k = 0; k < 100; ++k) {
    sparse.sweep();
    dense.sweep();
    ASSERT_LE((sparse.state().lambda - dense.lambda()).cwiseAbs().maxCoeff(), 1e-8) << k;
  }
}

TEST(AmgsContact, DenseSparseEquivalenceOnRandomProblems) {
  std::mt19937_64 rng(223);
  std::uniform_int_distribution<Index> bodies(2, 50);
  for (int trial = 0; trial < 20; ++trial) {
    const Index nb = bodies(rng);
    std::uniform_int_distribution<Index> rows(1, std::min<Index>(120, 3 * nb));
    const auto p = random_contact(rng, nb, rows(rng));
    const auto dense_prob = p.densify();
    const Vector lambda0 = fixtures::random_vector(rng, p.rows(), 0.0, 1.0);
    SolverConfig cfg;
    cfg.omega = ScaledDiagonalOmega{0.1 + 0.05 * trial};
    ContactAmgs sparse(p, lambda0, cfg);
    DenseAmgs dense(dense_prob, lambda0, cfg);
    for (int k = 0; k < 200; ++k) {
      sparse.sweep();
      dense.sweep();
      ASSERT_LE((sparse.state().x - dense.x()).cwiseAbs().maxCoeff(),
                1e-8 * (1.0 + dense.x().cwiseAbs().maxCoeff()))
          << "trial " << trial << " sweep " << k;
    }
  }
}

TEST(AmgsContact, SweepStateInvariants) {
  std::mt19937_64 rng(227);
  const auto p = random_contact(rng, 10, 15);
  ContactAmgs s(p, fixtures::random_vector(rng, 15, 0.0, 1.0), SolverConfig{});
  for (int k = 0; k < 30; ++k) {
    s.sweep();
    const auto& st = s.state();
    EXPECT_EQ(st.lambda, Vector(st.x.cwiseMax(0.0)));
    EXPECT_LE((st.v_acc - p.applied_velocity(st.lambda)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(s.residual(), p.residual(st.lambda), 1e-9);
  }
}

TEST(AmgsContact, FlopsPerSweepScaleWithNonzeros) {
  std::mt19937_64 rng(229);
  std::vector<double> ratios;
  for (Index bodies : {10u, 40u, 160u, 640u}) {
    const auto p = random_contact(rng, bodies, bodies);
    ContactAmgs s(p, Vector::Zero(p.rows()), SolverConfig{});
    constexpr int kSweeps = 20;
    for (int k = 0; k < kSweeps; ++k) {
      s.sweep();
    }
    // Unchanged impulses skip the column update, so sweeps cost at most this.
    ratios.push_back(static_cast<double>(s.flops()) /
                     (kSweeps * static_cast<double>(p.jacobian().nnz())));
  }
  for (double r : ratios) {
    EXPECT_LE(r, 3.0);
    EXPECT_NEAR(r, ratios.front(), 0.25 * ratios.front());
  }
}

TEST(AmgsContact, RejectsNegativeStart) {
  EXPECT_THROW(amgs_contact_solve(one_by_one_contact(), -Vector::Ones(1), iterations(1)),
               std::invalid_argument);
}

TEST(PgsContact, MatchesDensePgs) {
  std::mt19937_64 rng(233);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_contact(rng, 8, 12);
    const auto a = pgs_contact_solve(p, Vector::Zero(12), iterations(25));
    const auto b = pgs_solve(p.densify(), Vector::Zero(12), iterations(25));
    EXPECT_LE((a.lambda - b.lambda).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PBlcp, Examples) {
  const Vector l = Vector::Zero(1), u = Vector::Ones(1);
  EXPECT_EQ(p_blcp(Vector::Constant(1, 2.0), l, u), Vector::Ones(1));
  EXPECT_EQ(p_blcp(Vector::Constant(1, -1.0), l, u), Vector::Zero(1));
  EXPECT_EQ(p_blcp(Vector::Constant(1, 0.3), l, u), Vector::Constant(1, 0.3));
}

TEST(PBlcp, ResultLiesInBox) {
  std::mt19937_64 rng(239);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector lo = fixtures::random_vector(rng, 6, -2.0, 0.0);
    const Vector hi = lo + fixtures::random_vector(rng, 6, 0.01, 3.0);
    const Vector x = fixtures::random_vector(rng, 6, -5.0, 5.0);
    const Vector y = p_blcp(x, lo, hi);
    EXPECT_TRUE((y.array() >= lo.array()).all() && (y.array() <= hi.array()).all());
    EXPECT_EQ(p_blcp(y, lo, hi), y);
  }
}

TEST(Bounds, Validation) {
  EXPECT_THROW((Bounds{Vector::Ones(1), Vector::Ones(1)}.validate(1)), std::invalid_argument);
  EXPECT_THROW((Bounds{Vector::Zero(2), Vector::Ones(2)}.validate(1)), DimensionError);
  EXPECT_FALSE(Bounds::nonnegative(3).has_negative_lower());
  EXPECT_TRUE((Bounds{-Vector::Ones(1), Vector::Ones(1)}.has_negative_lower()));
}

TEST(AmgsBoxed, ClampsToUpperBound) {
  const Bounds box{Vector::Zero(1), Vector::Ones(1)};
  const auto s = amgs_boxed_solve(one_by_one_contact(), box, Vector::Zero(1), iterations(20));
  EXPECT_EQ(s.lambda, Vector::Ones(1));
  EXPECT_EQ(s.w, Vector::Constant(1, -2.0));
  EXPECT_EQ(boxed_residual(s.lambda, s.w, box), 0.0);
}

TEST(AmgsBoxed, StartIsProjectedIntoBox) {
  const Bounds box{Vector::Zero(1), Vector::Ones(1)};
  SolverConfig cfg = iterations(0);
  const auto s = amgs_boxed_solve(one_by_one_contact(), box, Vector::Constant(1, 5.0), cfg);
  EXPECT_EQ(s.lambda, Vector::Ones(1));
}

TEST(AmgsBoxed, UnboundedBoxIsBitwisePlainLcp) {
  std::mt19937_64 rng(241);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_contact(rng, 12, 20);
    const Vector lambda0 = fixtures::random_vector(rng, 20, 0.0, 1.0);
    SolverConfig cfg = iterations(40);
    cfg.record_history = true;
    const auto plain = amgs_contact_solve(p, lambda0, cfg);
    const auto boxed = amgs_boxed_solve(p, Bounds::nonnegative(20), lambda0, cfg);
    EXPECT_EQ(plain.x, boxed.x);
    EXPECT_EQ(plain.lambda, boxed.lambda);
    EXPECT_EQ(plain.residual_history, boxed.residual_history);
  }
}

TEST(AmgsBoxed, ConvergesToBoxedSolution) {
  std::mt19937_64 rng(251);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_contact(rng, 6, 6);
    Bounds box{Vector::Zero(6), fixtures::random_vector(rng, 6, 0.05, 0.5)};
    const auto s = amgs_boxed_solve(p, box, Vector::Zero(6), iterations(20000, 1e-10));
    EXPECT_TRUE(s.converged);
    EXPECT_LE(boxed_residual(s.lambda, p.constraint_velocity(s.lambda), box), 1e-10);
  }
}

TEST(Certificate, TwoByTwoExamples) {
  Matrix a(2, 2);
  a << 2, -1, -1, 2;
  const double tau = std::sqrt(5.0) / 4.0;
  SolverConfig cfg;
  auto c = certificate(a, cfg);
  EXPECT_NEAR(c.tau, tau, 1e-9);
  EXPECT_NEAR(c.delta, tau, 1e-9);
  EXPECT_TRUE(c.guaranteed);
  ASSERT_TRUE(c.closed_form_delta.has_value());
  EXPECT_NEAR(*c.closed_form_delta, c.delta, 1e-9);

  cfg.omega = ScaledDiagonalOmega{1.0};
  c = certificate(a, cfg);
  EXPECT_NEAR(c.delta, (2 * tau + 1) / 3, 1e-9);
  EXPECT_NEAR(c.delta, 0.7060113, 1e-6);
}

TEST(Certificate, DiagonalMatrix) {
  const Matrix a = Eigen::Vector3d(1, 4, 9).asDiagonal();
  SolverConfig cfg;
  auto c = certificate(a, cfg);
  EXPECT_EQ(c.tau, 0.0);
  EXPECT_EQ(c.delta, 0.0);
  cfg.omega = ScaledDiagonalOmega{2.0};
  c = certificate(a, cfg);
  EXPECT_NEAR(c.delta, 3.0 / 5.0, 1e-12);
}

TEST(Certificate, GeneralAndClosedFormAgree) {
  std::mt19937_64 rng(257);
  std::uniform_real_distribution<double> alpha(0.05, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = fixtures::random_spd(rng, 6);
    SolverConfig cfg;
    cfg.omega = ScaledDiagonalOmega{alpha(rng)};
    const auto c = certificate(a, cfg);
    ASSERT_TRUE(c.closed_form_delta.has_value());
    EXPECT_NEAR(c.delta, *c.closed_form_delta, 1e-9 * std::max(1.0, c.delta));
    EXPECT_EQ(c.guaranteed, c.delta < 1.0);
  }
}

TEST(Certificate, NegativeLowerBoundsAreNeverGuaranteed) {
  const Matrix a = Eigen::Vector2d(1, 1).asDiagonal();
  EXPECT_FALSE(certificate(a, SolverConfig{}, true).guaranteed);
}

TEST(Certificate, ReportFormat) {
  Matrix a(2, 2);
  a << 2, -1, -1, 2;
  const auto text = format_certificate(certificate(a, SolverConfig{}));
  EXPECT_NE(text.find("tau="), std::string::npos);
  EXPECT_NE(text.find("delta="), std::string::npos);
  EXPECT_NE(text.find("guaranteed=true"), std::string::npos);
}

TEST(AlphaSweep, MinimumAtReciprocalGamma) {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) {
    grid.push_back(0.1 * k);
  }
  const double tau = 0.5;
  double best_alpha = 0, best = 2;
  for (double a : grid) {
    const double d = scaled_diagonal_delta(tau, a, 2.0);
    if (d < best) {
      best = d;
      best_alpha = a;
    }
  }
  EXPECT_NEAR(best_alpha, 0.5, 1e-12);
  EXPECT_NEAR(best, 0.5, 1e-12);
}

TEST(AlphaSweep, LargeAlphaApproachesOne) {
  double prev_gap = 1.0;
  for (double a : {10.0, 100.0, 1e3, 1e4, 1e5}) {
    const double gap = std::abs(1.0 - scaled_diagonal_delta(0.3, a, 2.0));
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-4);
}

TEST(AlphaSweep, MatchesCertificatesOnGrid) {
  std::mt19937_64 rng(263);
  const Matrix a = fixtures::random_spd(rng, 5, 2.0);
  const std::vector<double> grid = {0.1, 0.25, 0.5, 0.75, 1.5};
  const auto sweep = alpha_sweep_certificates(a, 2.0, grid);
  ASSERT_EQ(sweep.size(), grid.size());
  for (const auto& [alpha, delta] : sweep) {
    SolverConfig cfg;
    cfg.omega = ScaledDiagonalOmega{alpha};
    EXPECT_NEAR(delta, certificate(a, cfg).delta, 1e-9);
  }
}

TEST(AlphaSweep, ScalarOmegaNeverBeatsTau) {
  std::mt19937_64 rng(269);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Matrix a = fixtures::random_spd(rng, 5);
    a.diagonal() += fixtures::random_vector(rng, 5, 0.0, 5.0);
    const double tau = gauss_seidel_norm(a);
    if (tau >= 1.0) {
      continue;
    }
    ++checked;
    for (double w = 0.05; w < 20.0; w *= 1.2) {
      SolverConfig cfg;
      cfg.omega = ScalarOmega{w};
      EXPECT_GE(certificate(a, cfg).delta, tau - 1e-12);
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Certificate, ContractionHoldsWhenGuaranteed) {
  std::mt19937_64 rng(271);
  int certified = 0;
  for (int trial = 0; trial < 40 && certified < 10; ++trial) {
    const LcpProblem p(fixtures::random_spd(rng, 8, 1.5), fixtures::random_vector(rng, 8));
    const SolverConfig cfg;
    const auto cert = certificate(p.a(), cfg);
    if (!cert.guaranteed) {
      continue;
    }
    ++certified;
    DenseAmgs ref(p, Vector::Zero(8), cfg);
    for (int k = 0; k < 20000; ++k) {
      ref.sweep();
    }
    const Vector xstar = ref.x();
    DenseAmgs run(p, Vector::Zero(8), cfg);
    double prev = (run.x() - xstar).norm();
    for (int k = 0; k < 100; ++k) {
      run.sweep();
      const double err = (run.x() - xstar).norm();
      EXPECT_LE(err, cert.delta * prev + 1e-9);
      prev = err;
    }
  }
  EXPECT_GT(certified, 0);
}

TEST(ProblemIo, ContactRoundTrip) {
  std::mt19937_64 rng(277);
  const auto p = random_contact(rng, 4, 5);
  Bounds box{-Vector::Ones(5), Vector::Constant(5, kInf)};
  const auto dir = std::filesystem::temp_directory_path() / "amgs_contact_io";
  std::filesystem::remove_all(dir);
  io::save_contact(dir, p, box);
  EXPECT_TRUE(io::is_contact_dir(dir));
  const auto back = io::load_contact(dir);
  EXPECT_EQ(back.problem.jacobian().to_dense(), p.jacobian().to_dense());
  EXPECT_EQ(back.problem.inv_mass().to_dense(), p.inv_mass().to_dense());
  EXPECT_EQ(back.problem.velocity(), p.velocity());
  EXPECT_EQ(back.problem.bias(), p.bias());
  ASSERT_TRUE(back.bounds.has_value());
  EXPECT_EQ(back.bounds->lower, box.lower);
  EXPECT_EQ(back.bounds->upper, box.upper);
  std::filesystem::remove_all(dir);
}

TEST(ProblemIo, DenseRoundTrip) {
  std::mt19937_64 rng(281);
  const LcpProblem p(fixtures::random_spd(rng, 4), fixtures::random_vector(rng, 4));
  const auto dir = std::filesystem::temp_directory_path() / "amgs_dense_io";
  std::filesystem::remove_all(dir);
  io::save_lcp(dir, p);
  EXPECT_FALSE(io::is_contact_dir(dir));
  const auto back = io::load_lcp(dir);
  EXPECT_EQ(back.problem.a(), p.a());
  EXPECT_EQ(back.problem.q(), p.q());
  EXPECT_FALSE(back.bounds.has_value());
  std::filesystem::remove_all(dir);
}

TEST(ProblemIo, ResidualHistoryCsv) {
  const auto text = io::format_residual_history({0.5, 0.25}, 1.0);
  EXPECT_EQ(text, "iter,residual\n0,1\n1,0.5\n2,0.25\n");
  const auto precise = io::format_residual_history({0.1});
  EXPECT_EQ(precise, "iter,residual\n1,0.10000000000000001\n");
}
