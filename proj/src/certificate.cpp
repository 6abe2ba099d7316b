#include "amgs/certificate.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace amgs {
namespace {

constexpr double kNormTol = 1e-10;
constexpr Index kNormMaxIter = 10000;

double norm2(const Matrix& x) {
  if (x.size() == 0) {
    return 0.0;
  }
  return spectral_norm(x, kNormTol, kNormMaxIter).value;
}

}  // namespace

double gauss_seidel_norm(const Matrix& a) {
  const TriangularSplit split = split_dlu(a);
  Matrix lower_part = split.lower.to_dense();
  Matrix dl = -lower_part;
  dl.diagonal() += split.diag;
  // forward substitution on every column of U
  const Matrix x = dl.triangularView<Eigen::Lower>().solve(split.upper.to_dense());
  return norm2(x);
}

double scaled_diagonal_delta(double tau, double alpha, double gamma) {
  const double ag = alpha * gamma;
  return (2.0 * tau + std::abs(ag - 1.0)) / (1.0 + ag);
}

ConvergenceCertificate certificate(const Matrix& a, const SolverConfig& cfg,
                                   bool negative_lower_bounds) {
  const TriangularSplit split = split_dlu(a);
  const Vector& d = split.diag;
  const Vector omega = omega_diagonal(cfg, d);
  const Vector g_omega = cfg.gamma * omega;
  const Vector d_plus = d + g_omega;

  ConvergenceCertificate cert;
  cert.tau = gauss_seidel_norm(a);

  // Both diagonal factors are diagonal matrices: the norm is the largest
  // magnitude entry.
  const double scale_norm = d.cwiseQuotient(d_plus).cwiseAbs().maxCoeff();
  const double shift_norm = (g_omega - d).cwiseQuotient(d_plus).cwiseAbs().maxCoeff();
  cert.delta = 2.0 * scale_norm * cert.tau + shift_norm;

  const Matrix lower = split.lower.to_dense();
  const Matrix upper = split.upper.to_dense();
  Matrix t = -lower;
  t.diagonal() += d_plus;
  const auto tri = t.triangularView<Eigen::Lower>();
  cert.xi = norm2(tri.solve(upper));
  Matrix shift = lower;
  shift.diagonal() += g_omega - d;
  cert.eta = norm2(tri.solve(shift));
  cert.mu = norm2(tri.solve(lower));

  if (const auto* sd = std::get_if<ScaledDiagonalOmega>(&cfg.omega)) {
    cert.closed_form_delta = scaled_diagonal_delta(cert.tau, sd->alpha, cfg.gamma);
    if (std::abs(*cert.closed_form_delta - cert.delta) >
        1e-9 * std::max(1.0, cert.delta)) {
      throw std::logic_error("certificate: closed form disagrees with general delta");
    }
  }
  cert.guaranteed = cert.delta < 1.0 && !negative_lower_bounds;
  return cert;
}

std::vector<std::pair<double, double>> alpha_sweep_certificates(
    const Matrix& a, double gamma, const std::vector<double>& alphas) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gamma must be positive");
  }
  const double tau = gauss_seidel_norm(a);
  std::vector<std::pair<double, double>> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) {
      throw std::invalid_argument("alpha must be positive");
    }
    out.emplace_back(alpha, scaled_diagonal_delta(tau, alpha, gamma));
  }
  return out;
}

std::string format_certificate(const ConvergenceCertificate& cert) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "tau=" << cert.tau << '\n';
  os << "delta=" << cert.delta << '\n';
  os << "guaranteed=" << (cert.guaranteed ? "true" : "false") << '\n';
  os << "xi=" << cert.xi << '\n';
  os << "eta=" << cert.eta << '\n';
  os << "mu=" << cert.mu << '\n';
  if (cert.closed_form_delta) {
    os << "closed_form_delta=" << *cert.closed_form_delta << '\n';
  }
  return os.str();
}

}  // namespace amgs
