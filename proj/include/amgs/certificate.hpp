#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amgs/lcp.hpp"

namespace amgs {

/// Sufficient convergence condition for AMGS on a positive definite A.
///
/// `delta` is 2 ||(D + gamma Omega)^-1 D|| tau + ||(D + gamma Omega)^-1
/// (gamma Omega - D)|| with tau = ||(D - L)^-1 U||. `xi`, `eta` and `mu` are
/// the spectral norms of (D - L + gamma Omega)^-1 applied to U,
/// (gamma Omega - D + L) and L, evaluated numerically rather than through
/// their diagonal bounds.
struct ConvergenceCertificate {
  double tau = 0.0;
  double xi = 0.0;
  double eta = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  bool guaranteed = false;
  /// Set when Omega = alpha D: (2 tau + |alpha gamma - 1|) / (1 + alpha gamma).
  std::optional<double> closed_form_delta;
};

/// ||(D - L)^-1 U|| for A = D - L - U.
double gauss_seidel_norm(const Matrix& a);

/// `negative_lower_bounds` marks a boxed problem with some l_i < 0, for which
/// the bound is not established; `guaranteed` is then always false.
ConvergenceCertificate certificate(const Matrix& a, const SolverConfig& cfg,
                                   bool negative_lower_bounds = false);

/// Closed form of delta for Omega = alpha D.
double scaled_diagonal_delta(double tau, double alpha, double gamma);

/// (alpha, delta) for Omega = alpha D over the given grid.
std::vector<std::pair<double, double>> alpha_sweep_certificates(
    const Matrix& a, double gamma, const std::vector<double>& alphas);

/// `tau=`, `delta=`, `guaranteed=` lines, plus the other fields.
std::string format_certificate(const ConvergenceCertificate& cert);

}  // namespace amgs
