#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "amgs/sparse.hpp"

namespace amgs {

/// LCP(q, A): find lambda >= 0 with w = A lambda + q >= 0 and lambda^T w = 0.
///
/// A is symmetric with a strictly positive diagonal; positive definiteness is
/// assumed and only checked by `is_positive_definite`.
class LcpProblem {
 public:
  LcpProblem(Matrix a, Vector q);

  Index size() const noexcept { return static_cast<Index>(q_.size()); }
  const Matrix& a() const noexcept { return a_; }
  const Vector& q() const noexcept { return q_; }

  Vector velocity(const Vector& lambda) const;  // A lambda + q
  bool is_positive_definite() const;

 private:
  Matrix a_;
  Vector q_;
};

struct BoxedLcpProblem {
  LcpProblem base;
  Vector lower;
  Vector upper;  // +infinity marks an unbounded side

  BoxedLcpProblem(LcpProblem base, Vector lower, Vector upper);
};

struct Solution {
  Vector lambda;
  Vector w;
  Vector x;  // modulus variable; empty for solvers that do not use one
  Index iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

/// Omega = value * E.
struct ScalarOmega {
  double value;
};
/// Omega = (mean of diag(A) / gamma) * E, re-evaluated per problem.
struct AverageDiagonalOmega {};
/// Omega = alpha * D.
struct ScaledDiagonalOmega {
  double alpha;
};
using OmegaChoice =
    std::variant<ScalarOmega, AverageDiagonalOmega, ScaledDiagonalOmega>;

struct SolverConfig {
  double gamma = 2.0;
  OmegaChoice omega = ScaledDiagonalOmega{0.5};
  Index max_iterations = 10;
  double residual_tol = 0.0;
  bool record_history = false;

  void validate() const;
};

/// Diagonal of Omega for a problem whose A has the given diagonal.
Vector omega_diagonal(const SolverConfig& cfg, const Vector& a_diag);
std::string describe(const OmegaChoice& omega);

enum class Splitting { MJ, MGS, MSOR, MAOR, MMSIM, AMJ, AMGS, AMSOR, AMAOR };

/// A named matrix splitting. MMSIM uses the MAOR-family first splitting
/// (1/alpha)(D - beta L); alpha = beta = 1 gives the Gauss-Seidel split.
struct SplittingPreset {
  Splitting kind = Splitting::AMGS;
  double alpha = 1.0;
  double beta = 1.0;

  static SplittingPreset mj() { return {Splitting::MJ}; }
  static SplittingPreset mgs() { return {Splitting::MGS}; }
  static SplittingPreset msor(double a) { return {Splitting::MSOR, a, a}; }
  static SplittingPreset maor(double a, double b) { return {Splitting::MAOR, a, b}; }
  static SplittingPreset mmsim(double a = 1.0, double b = 1.0) {
    return {Splitting::MMSIM, a, b};
  }
  static SplittingPreset amj() { return {Splitting::AMJ}; }
  static SplittingPreset amgs() { return {Splitting::AMGS}; }
  static SplittingPreset amsor(double a) { return {Splitting::AMSOR, a, a}; }
  static SplittingPreset amaor(double a, double b) { return {Splitting::AMAOR, a, b}; }

  bool accelerated() const noexcept;
  std::string name() const;
};

/// Splitting matrices with A = M1 - N1 = M2 - N2. For the plain modulus
/// presets only M1/N1 are meaningful and M2 = A, N2 = 0.
struct SplitMatrices {
  Matrix m1, n1, m2, n2;
};
SplitMatrices splitting_matrices(const Matrix& a, const SplittingPreset& preset);

/// || min(lambda, A lambda + q) ||_2
double residual(const LcpProblem& prob, const Vector& lambda);
double residual(const Vector& lambda, const Vector& w);

/// Exhaustive active-set enumeration. Test oracle only: m <= 12.
Solution oracle_solve(const LcpProblem& prob);

Solution pgs_solve(const LcpProblem& prob, const Vector& lambda0,
                   const SolverConfig& cfg);

/// (M0 + gamma Omega) x+ = N0 x + (gamma Omega - A)|x| - gamma q
///
/// Here and in ammsi_solve the convergence test and history use
/// max(RES(lambda), modulus_fixed_point_residual(x)).
Solution mmsi_solve(const LcpProblem& prob, const SplittingPreset& preset,
                    const Vector& x0, const SolverConfig& cfg);

/// (M1 + gamma Omega) x+ = N1 x + (gamma Omega - M2)|x| + N2 |x+| - gamma q
Solution ammsi_solve(const LcpProblem& prob, const SplittingPreset& preset,
                     const Vector& x0, const SolverConfig& cfg);

/// Residual of the modulus fixed-point equation at x for the given preset.
double modulus_fixed_point_residual(const LcpProblem& prob,
                                    const SplittingPreset& preset,
                                    const Vector& x, const SolverConfig& cfg);

/// AMGS on an explicit matrix, one component at a time. Holds the iterate so
/// callers can observe every sweep.
class DenseAmgs {
 public:
  DenseAmgs(const LcpProblem& prob, const Vector& lambda0,
            const SolverConfig& cfg);

  void sweep();
  double residual() const;

  const Vector& x() const noexcept { return x_; }
  const Vector& lambda() const noexcept { return lambda_; }
  Index sweeps() const noexcept { return sweeps_; }

 private:
  const LcpProblem* prob_;
  Matrix rows_;  // A^T, so row i of A is contiguous
  double gamma_;
  Vector x_;
  Vector lambda_;
  Vector step_;     // gamma / (A_ii + gamma Omega_ii)
  Vector two_omega_;
  Index sweeps_ = 0;
};

Solution amgs_dense_solve(const LcpProblem& prob, const Vector& lambda0,
                          const SolverConfig& cfg);

/// x = (gamma lambda - Omega^-1 w) / 2 for a complementary pair.
Vector to_modulus(const Vector& lambda, const Vector& w, double gamma,
                  const Vector& omega_diag, double tol = 1e-12);

struct ComplementaryPair {
  Vector lambda;
  Vector w;
};
/// lambda = (|x| + x) / gamma, w = Omega (|x| - x).
ComplementaryPair from_modulus(const Vector& x, double gamma,
                               const Vector& omega_diag);

}  // namespace amgs
