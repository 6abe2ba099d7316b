#include "amgs/lcp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace amgs {
namespace {

using EIndex = Eigen::Index;

void require_size(const Vector& v, Index m, const char* what) {
  if (static_cast<Index>(v.size()) != m) {
    std::ostringstream os;
    os << what << ": expected length " << m << ", got " << v.size();
    throw DimensionError(os.str());
  }
}

void require_nonnegative(const Vector& v, const char* what) {
  for (EIndex i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      std::ostringstream os;
      os << what << ": entry " << i << " is negative (" << v[i] << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

// Drives a sweep function until the residual tolerance or the iteration
// budget is hit. The residual is evaluated once per full sweep.
template <typename Sweep, typename Res>
void iterate(const SolverConfig& cfg, Solution& sol, Sweep sweep, Res res) {
  double r = res();
  sol.converged = r <= cfg.residual_tol;
  for (Index k = 0; k < cfg.max_iterations && !sol.converged; ++k) {
    sweep();
    r = res();
    ++sol.iterations;
    if (cfg.record_history) {
      sol.residual_history.push_back(r);
    }
    sol.converged = r <= cfg.residual_tol;
  }
}

Vector positive_part_scaled(const Vector& x, double gamma) {
  const double s = 2.0 / gamma;
  Vector out(x.size());
  for (EIndex i = 0; i < x.size(); ++i) {
    out[i] = s * std::max(0.0, x[i]);
  }
  return out;
}

void check_preset(const SplittingPreset& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw std::invalid_argument(p.name() + ": alpha and beta must be positive");
  }
}

// Forward substitution for a lower-triangular system; rejects anything with
// an upper part because the modulus sweeps rely on a single forward pass.
void require_lower(const Matrix& t, const std::string& what) {
  for (EIndex c = 1; c < t.cols(); ++c) {
    for (EIndex r = 0; r < c; ++r) {
      if (t(r, c) != 0.0) {
        throw std::logic_error(what + " is not lower triangular");
      }
    }
  }
}

}  // namespace

LcpProblem::LcpProblem(Matrix a, Vector q) : a_(std::move(a)), q_(std::move(q)) {
  if (a_.rows() != a_.cols()) {
    throw DimensionError("LCP matrix must be square");
  }
  require_size(q_, static_cast<Index>(a_.rows()), "LCP vector q");
  if (a_.size() > 0) {
    const double scale = a_.cwiseAbs().maxCoeff();
    if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("LCP matrix is not symmetric");
    }
  }
  for (EIndex i = 0; i < a_.rows(); ++i) {
    if (!(a_(i, i) > 0.0)) {
      std::ostringstream os;
      os << "LCP matrix diagonal entry " << i << " is " << a_(i, i);
      throw NonPositiveDiagonal(static_cast<Index>(i), a_(i, i), os.str());
    }
  }
}

Vector LcpProblem::velocity(const Vector& lambda) const {
  require_size(lambda, size(), "lambda");
  return a_ * lambda + q_;
}

bool LcpProblem::is_positive_definite() const {
  return Eigen::LLT<Matrix>(a_).info() == Eigen::Success;
}

BoxedLcpProblem::BoxedLcpProblem(LcpProblem b, Vector l, Vector u)
    : base(std::move(b)), lower(std::move(l)), upper(std::move(u)) {
  require_size(lower, base.size(), "lower bound");
  require_size(upper, base.size(), "upper bound");
  for (EIndex i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw std::invalid_argument("bounds require l < u at index " +
                                  std::to_string(i));
    }
  }
}

void SolverConfig::validate() const {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gamma must be positive");
  }
  std::visit(
      [](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ScalarOmega>) {
          if (!(o.value > 0.0)) {
            throw std::invalid_argument("omega must be positive");
          }
        } else if constexpr (std::is_same_v<T, ScaledDiagonalOmega>) {
          if (!(o.alpha > 0.0)) {
            throw std::invalid_argument("alpha must be positive");
          }
        }
      },
      omega);
  if (residual_tol < 0.0) {
    throw std::invalid_argument("residual_tol must be nonnegative");
  }
}

Vector omega_diagonal(const SolverConfig& cfg, const Vector& a_diag) {
  cfg.validate();
  return std::visit(
      [&](const auto& o) -> Vector {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ScalarOmega>) {
          return Vector::Constant(a_diag.size(), o.value);
        } else if constexpr (std::is_same_v<T, AverageDiagonalOmega>) {
          if (a_diag.size() == 0) {
            return Vector();
          }
          return Vector::Constant(a_diag.size(),
                                  a_diag.sum() / (static_cast<double>(a_diag.size()) *
                                                  cfg.gamma));
        } else {
          return o.alpha * a_diag;
        }
      },
      cfg.omega);
}

std::string describe(const OmegaChoice& omega) {
  std::ostringstream os;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ScalarOmega>) {
          os << o.value << "E";
        } else if constexpr (std::is_same_v<T, AverageDiagonalOmega>) {
          os << "avgE";
        } else {
          os << o.alpha << "D";
        }
      },
      omega);
  return os.str();
}

bool SplittingPreset::accelerated() const noexcept {
  switch (kind) {
    case Splitting::MMSIM:
    case Splitting::AMJ:
    case Splitting::AMGS:
    case Splitting::AMSOR:
    case Splitting::AMAOR:
      return true;
    default:
      return false;
  }
}

std::string SplittingPreset::name() const {
  std::ostringstream os;
  switch (kind) {
    case Splitting::MJ: return "MJ";
    case Splitting::MGS: return "MGS";
    case Splitting::MSOR: os << "MSOR(" << alpha << ")"; break;
    case Splitting::MAOR: os << "MAOR(" << alpha << "," << beta << ")"; break;
    case Splitting::MMSIM: os << "MMSIM(" << alpha << "," << beta << ")"; break;
    case Splitting::AMJ: return "AMJ";
    case Splitting::AMGS: return "AMGS";
    case Splitting::AMSOR: os << "AMSOR(" << alpha << ")"; break;
    case Splitting::AMAOR: os << "AMAOR(" << alpha << "," << beta << ")"; break;
  }
  return os.str();
}

SplitMatrices splitting_matrices(const Matrix& a, const SplittingPreset& preset) {
  check_preset(preset);
  const EIndex m = a.rows();
  const Matrix d = a.diagonal().asDiagonal();
  Matrix l = Matrix::Zero(m, m);
  Matrix u = Matrix::Zero(m, m);
  l.triangularView<Eigen::StrictlyLower>() = -a;
  u.triangularView<Eigen::StrictlyUpper>() = -a;

  const double al = preset.alpha;
  const double be = preset.beta;
  SplitMatrices s;
  switch (preset.kind) {
    case Splitting::MJ:
    case Splitting::AMJ:
      s.m1 = d;
      break;
    case Splitting::MGS:
    case Splitting::AMGS:
      s.m1 = d - l;
      break;
    case Splitting::MSOR:
    case Splitting::AMSOR:
      s.m1 = d / al - l;
      break;
    case Splitting::MAOR:
    case Splitting::MMSIM:
    case Splitting::AMAOR:
      s.m1 = (d - be * l) / al;
      break;
  }
  s.n1 = s.m1 - a;
  if (preset.accelerated() && preset.kind != Splitting::MMSIM) {
    s.m2 = d - u;
    s.n2 = l;
  } else {
    s.m2 = a;
    s.n2 = Matrix::Zero(m, m);
  }
  return s;
}

double residual(const Vector& lambda, const Vector& w) {
  if (lambda.size() != w.size()) {
    throw DimensionError("residual: lambda and w differ in length");
  }
  double sum = 0.0;
  for (EIndex i = 0; i < lambda.size(); ++i) {
    const double v = std::min(lambda[i], w[i]);
    sum += v * v;
  }
  return std::sqrt(sum);
}

double residual(const LcpProblem& prob, const Vector& lambda) {
  return residual(lambda, prob.velocity(lambda));
}

Solution oracle_solve(const LcpProblem& prob) {
  const Index m = prob.size();
  if (m > 12) {
    throw std::invalid_argument("oracle_solve enumerates 2^m subsets; m = " +
                                std::to_string(m) + " exceeds 12");
  }
  const Matrix& a = prob.a();
  const Vector& q = prob.q();
  const double tol = 1e-12 * std::max(1.0, q.size() ? q.cwiseAbs().maxCoeff() : 0.0);

  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    std::vector<EIndex> active;
    for (Index i = 0; i < m; ++i) {
      if (mask & (1UL << i)) {
        active.push_back(static_cast<EIndex>(i));
      }
    }
    Vector lambda = Vector::Zero(static_cast<EIndex>(m));
    if (!active.empty()) {
      const auto k = static_cast<EIndex>(active.size());
      Matrix sub(k, k);
      Vector rhs(k);
      for (EIndex r = 0; r < k; ++r) {
        rhs[r] = -q[active[r]];
        for (EIndex c = 0; c < k; ++c) {
          sub(r, c) = a(active[r], active[c]);
        }
      }
      const Vector sol = sub.fullPivLu().solve(rhs);
      for (EIndex r = 0; r < k; ++r) {
        lambda[active[r]] = sol[r];
      }
    }
    const Vector w = a * lambda + q;
    if (lambda.minCoeff() >= -tol && w.minCoeff() >= -tol) {
      Solution out;
      out.lambda = lambda.cwiseMax(0.0);
      out.w = a * out.lambda + q;
      out.converged = true;
      if (residual(out.lambda, out.w) > 1e-9) {
        throw std::runtime_error("oracle_solve: enumerated solution has residual " +
                                 std::to_string(residual(out.lambda, out.w)));
      }
      return out;
    }
  }
  throw std::runtime_error(
      "oracle_solve: no complementary subset found (is A positive definite?)");
}

Solution pgs_solve(const LcpProblem& prob, const Vector& lambda0,
                   const SolverConfig& cfg) {
  const Index m = prob.size();
  require_size(lambda0, m, "lambda0");
  require_nonnegative(lambda0, "lambda0");
  cfg.validate();

  const Matrix& a = prob.a();
  const Vector& q = prob.q();
  Solution sol;
  sol.lambda = lambda0;
  Vector& lam = sol.lambda;
  iterate(
      cfg, sol,
      [&] {
        for (EIndex i = 0; i < lam.size(); ++i) {
          // lower part uses the updated entries, upper part the old ones
          double sum = -q[i];
          for (EIndex j = 0; j < lam.size(); ++j) {
            if (j != i) {
              sum -= a(i, j) * lam[j];
            }
          }
          lam[i] = std::max(0.0, sum / a(i, i));
        }
      },
      [&] { return residual(prob, lam); });
  sol.w = prob.velocity(lam);
  return sol;
}

namespace {

// RES(lambda) alone ignores the w encoded in the negative part of x, which
// can still be far from its limit; requiring the fixed-point equation as
// well makes a converged x a fixed point.
double modulus_residual(const LcpProblem& prob, const SplittingPreset& preset,
                        const Solution& sol, const SolverConfig& cfg) {
  return std::max(residual(prob, sol.lambda),
                  modulus_fixed_point_residual(prob, preset, sol.x, cfg));
}

}  // namespace

Solution mmsi_solve(const LcpProblem& prob, const SplittingPreset& preset,
                    const Vector& x0, const SolverConfig& cfg) {
  if (preset.accelerated()) {
    throw std::invalid_argument("mmsi_solve expects MJ, MGS, MSOR or MAOR, got " +
                                preset.name());
  }
  const Index m = prob.size();
  require_size(x0, m, "x0");
  cfg.validate();
  const Matrix& a = prob.a();
  const SplitMatrices s = splitting_matrices(a, preset);
  const Vector omega = omega_diagonal(cfg, a.diagonal());
  Matrix t = s.m1;
  t.diagonal() += cfg.gamma * omega;
  require_lower(t, "M0 + gamma Omega");
  Matrix abs_coeff = -a;
  abs_coeff.diagonal() += cfg.gamma * omega;

  Solution sol;
  sol.x = x0;
  sol.lambda = positive_part_scaled(sol.x, cfg.gamma);
  iterate(
      cfg, sol,
      [&] {
        const Vector rhs =
            s.n1 * sol.x + abs_coeff * sol.x.cwiseAbs() - cfg.gamma * prob.q();
        sol.x = t.triangularView<Eigen::Lower>().solve(rhs);
        sol.lambda = positive_part_scaled(sol.x, cfg.gamma);
      },
      [&] { return modulus_residual(prob, preset, sol, cfg); });
  sol.w = prob.velocity(sol.lambda);
  return sol;
}

Solution ammsi_solve(const LcpProblem& prob, const SplittingPreset& preset,
                     const Vector& x0, const SolverConfig& cfg) {
  if (!preset.accelerated()) {
    throw std::invalid_argument(
        "ammsi_solve expects MMSIM, AMJ, AMGS, AMSOR or AMAOR, got " +
        preset.name());
  }
  const Index m = prob.size();
  require_size(x0, m, "x0");
  cfg.validate();
  const Matrix& a = prob.a();
  const SplitMatrices s = splitting_matrices(a, preset);
  const Vector omega = omega_diagonal(cfg, a.diagonal());
  Matrix t = s.m1;
  t.diagonal() += cfg.gamma * omega;
  require_lower(t, "M1 + gamma Omega");
  Matrix abs_coeff = -s.m2;
  abs_coeff.diagonal() += cfg.gamma * omega;
  for (EIndex i = 0; i < s.n2.rows(); ++i) {
    for (EIndex j = i; j < s.n2.cols(); ++j) {
      if (s.n2(i, j) != 0.0) {
        throw std::logic_error("N2 is not strictly lower triangular");
      }
    }
  }

  Solution sol;
  sol.x = x0;
  sol.lambda = positive_part_scaled(sol.x, cfg.gamma);
  iterate(
      cfg, sol,
      [&] {
        Vector next = s.n1 * sol.x + abs_coeff * sol.x.cwiseAbs() - cfg.gamma * prob.q();
        for (EIndex i = 0; i < next.size(); ++i) {
          double r = next[i];
          for (EIndex j = 0; j < i; ++j) {
            r += s.n2(i, j) * std::abs(next[j]) - t(i, j) * next[j];
          }
          next[i] = r / t(i, i);
        }
        sol.x = std::move(next);
        sol.lambda = positive_part_scaled(sol.x, cfg.gamma);
      },
      [&] { return modulus_residual(prob, preset, sol, cfg); });
  sol.w = prob.velocity(sol.lambda);
  return sol;
}

double modulus_fixed_point_residual(const LcpProblem& prob,
                                    const SplittingPreset& preset,
                                    const Vector& x, const SolverConfig& cfg) {
  require_size(x, prob.size(), "x");
  const SplitMatrices s = splitting_matrices(prob.a(), preset);
  const Vector omega = omega_diagonal(cfg, prob.a().diagonal());
  const Vector ax = x.cwiseAbs();
  const Vector g_omega = cfg.gamma * omega;
  const Vector lhs = s.m1 * x + g_omega.cwiseProduct(x);
  const Vector rhs = s.n1 * x + g_omega.cwiseProduct(ax) - s.m2 * ax + s.n2 * ax -
                     cfg.gamma * prob.q();
  return (lhs - rhs).norm();
}

DenseAmgs::DenseAmgs(const LcpProblem& prob, const Vector& lambda0,
                     const SolverConfig& cfg)
    : prob_(&prob), gamma_(cfg.gamma) {
  require_size(lambda0, prob.size(), "lambda0");
  require_nonnegative(lambda0, "lambda0");
  cfg.validate();
  const Vector d = prob.a().diagonal();
  const Vector omega = omega_diagonal(cfg, d);
  step_ = gamma_ * (d + gamma_ * omega).cwiseInverse();
  two_omega_ = 2.0 * omega;
  x_ = (gamma_ / 2.0) * lambda0;
  lambda_ = lambda0;
  rows_ = prob.a().transpose();
}

void DenseAmgs::sweep() {
  const Vector& q = prob_->q();
  const double s = 2.0 / gamma_;
  const EIndex m = x_.size();
  for (EIndex i = 0; i < m; ++i) {
    // entries j < i of lambda_ already hold this sweep's values
    double sum = q[i] + rows_.col(i).dot(lambda_);
    // (x_-)_i still belongs to the previous sweep: x_i has not moved yet
    sum -= two_omega_[i] * std::max(0.0, -x_[i]);
    x_[i] -= step_[i] * sum;
    lambda_[i] = s * std::max(0.0, x_[i]);
  }
  ++sweeps_;
}

double DenseAmgs::residual() const { return amgs::residual(*prob_, lambda_); }

Solution amgs_dense_solve(const LcpProblem& prob, const Vector& lambda0,
                          const SolverConfig& cfg) {
  DenseAmgs solver(prob, lambda0, cfg);
  Solution sol;
  iterate(cfg, sol, [&] { solver.sweep(); }, [&] { return solver.residual(); });
  sol.x = solver.x();
  sol.lambda = solver.lambda();
  sol.w = prob.velocity(sol.lambda);
  return sol;
}

Vector to_modulus(const Vector& lambda, const Vector& w, double gamma,
                  const Vector& omega_diag, double tol) {
  if (lambda.size() != w.size() || lambda.size() != omega_diag.size()) {
    throw DimensionError("to_modulus: length mismatch");
  }
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("to_modulus: gamma must be positive");
  }
  Vector x(lambda.size());
  for (EIndex i = 0; i < lambda.size(); ++i) {
    const double l = lambda[i];
    const double v = w[i];
    if (l < -tol || v < -tol ||
        std::abs(l * v) > tol * (1.0 + std::abs(l) + std::abs(v))) {
      std::ostringstream os;
      os << "to_modulus: pair (" << l << ", " << v << ") at index " << i
         << " is not complementary";
      throw std::domain_error(os.str());
    }
    if (!(omega_diag[i] > 0.0)) {
      throw std::invalid_argument("to_modulus: omega must be positive");
    }
    x[i] = 0.5 * (gamma * l - v / omega_diag[i]);
  }
  return x;
}

ComplementaryPair from_modulus(const Vector& x, double gamma,
                               const Vector& omega_diag) {
  if (x.size() != omega_diag.size()) {
    throw DimensionError("from_modulus: length mismatch");
  }
  const Vector ax = x.cwiseAbs();
  return {(ax + x) / gamma, omega_diag.cwiseProduct(ax - x)};
}

}  // namespace amgs
