#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "amgs/lcp.hpp"
#include "amgs/sparse.hpp"

namespace amgs {

/// Box bounds for a BLCP. Upper entries may be +infinity.
struct Bounds {
  Vector lower;
  Vector upper;

  static Bounds nonnegative(Index m);
  void validate(Index m) const;
  bool has_negative_lower() const;
};

/// l <= lambda <= u elementwise clamp.
Vector p_blcp(const Vector& x, const Vector& lower, const Vector& upper);

/// Natural-map residual || lambda - p_blcp(lambda - w) ||. Components with
/// l = 0, u = inf use min(lambda, w) directly, so unbounded rows reproduce
/// the plain LCP residual exactly.
double boxed_residual(const Vector& lambda, const Vector& w, const Bounds& bounds);

/// Row i of J and column i of M^-1 J^T over one shared pattern, with 32-bit
/// column indices. Only built when every column of M^-1 J^T lies inside the
/// pattern of its J row, which holds for diagonal mass blocks.
struct FusedRows {
  std::vector<Index> offsets;
  std::vector<std::uint32_t> cols;
  std::vector<double> j;
  std::vector<double> mhat;
};

/// The contact LCP in factored form: A = J M^-1 J^T and q = J v + b are never
/// formed. M^-1 J^T is kept both as n x m and transposed so that column i is
/// contiguous for the sweeps.
class ContactLcp {
 public:
  /// Throws NonPositiveDiagonal when a constraint row has A_ii <= 0.
  ContactLcp(SparseMatrix jacobian, BlockDiagInverseMass inv_mass, Vector v,
             Vector b);

  Index rows() const noexcept { return j_.rows(); }
  Index dofs() const noexcept { return j_.cols(); }

  const SparseMatrix& jacobian() const noexcept { return j_; }
  const BlockDiagInverseMass& inv_mass() const noexcept { return inv_mass_; }
  const Vector& velocity() const noexcept { return v_; }
  const Vector& bias() const noexcept { return b_; }
  const Vector& a_diag() const noexcept { return a_diag_; }
  const SparseMatrix& mhat() const noexcept { return mhat_; }
  const SparseMatrix& mhat_columns() const noexcept { return mhat_t_; }
  const std::optional<FusedRows>& fused_rows() const noexcept { return fused_; }

  /// v + M^-1 J^T lambda
  Vector applied_velocity(const Vector& lambda) const;
  /// A lambda + q evaluated as J (v + M^-1 J^T lambda) + b
  Vector constraint_velocity(const Vector& lambda) const;
  double residual(const Vector& lambda) const;

  /// Explicit (J M^-1 J^T, J v + b). O(m^2) memory.
  LcpProblem densify() const;

 private:
  SparseMatrix j_;
  BlockDiagInverseMass inv_mass_;
  Vector v_;
  Vector b_;
  SparseMatrix mhat_;
  SparseMatrix mhat_t_;
  Vector a_diag_;
  std::optional<FusedRows> fused_;
};

/// Iterate of the factored AMGS sweep. At every sweep boundary
/// lambda = (2/gamma) max(0, x) (or its box projection) and
/// v_acc = v + M^-1 J^T lambda.
struct SweepState {
  Vector x;
  Vector lambda;
  Vector v_acc;
};

/// AMGS sweeps on a ContactLcp in O(nnz(J)) per sweep. With bounds the
/// impulse update is projected onto [l, u].
class ContactAmgs {
 public:
  ContactAmgs(const ContactLcp& prob, const Vector& lambda0,
              const SolverConfig& cfg, std::optional<Bounds> bounds = std::nullopt);

  void sweep();
  /// RES (or the boxed natural-map residual) reusing v_acc.
  double residual() const;

  const SweepState& state() const noexcept { return state_; }
  Index sweeps() const noexcept { return sweeps_; }
  /// Multiply-adds performed by sweeps so far.
  Index flops() const noexcept { return flops_; }

 private:
  const ContactLcp* prob_;
  std::optional<Bounds> bounds_;
  double gamma_;
  Vector step_;  // gamma / (A_ii + gamma Omega_ii)
  Vector two_omega_;
  SweepState state_;
  Index sweeps_ = 0;
  Index flops_ = 0;
};

Solution amgs_contact_solve(const ContactLcp& prob, const Vector& lambda0,
                            const SolverConfig& cfg);

Solution amgs_boxed_solve(const ContactLcp& prob, const Bounds& bounds,
                          const Vector& lambda0, const SolverConfig& cfg);

/// Projected Gauss-Seidel in factored form (sequential impulses). Only
/// max_iterations, residual_tol and record_history of cfg are used.
Solution pgs_contact_solve(const ContactLcp& prob, const Vector& lambda0,
                           const SolverConfig& cfg,
                           const std::optional<Bounds>& bounds = std::nullopt);

}  // namespace amgs
