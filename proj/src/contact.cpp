#include "amgs/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
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

std::optional<FusedRows> fuse_rows(const SparseMatrix& j, const SparseMatrix& mcols) {
  if (j.cols() > std::numeric_limits<std::uint32_t>::max()) {
    return std::nullopt;
  }
  FusedRows f;
  f.offsets.assign(j.row_offsets().begin(), j.row_offsets().end());
  f.cols.reserve(j.nnz());
  f.j.assign(j.values().begin(), j.values().end());
  f.mhat.assign(j.nnz(), 0.0);
  for (Index i = 0; i < j.rows(); ++i) {
    const auto jc = j.row_cols(i);
    const auto mc = mcols.row_cols(i);
    const auto mv = mcols.row_values(i);
    Index p = 0;
    for (Index r = 0; r < mc.size(); ++r) {
      while (p < jc.size() && jc[p] < mc[r]) {
        ++p;
      }
      if (p == jc.size() || jc[p] != mc[r]) {
        return std::nullopt;
      }
      f.mhat[f.offsets[i] + p] = mv[r];
    }
    for (Index c : jc) {
      f.cols.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return f;
}

template <typename Sweep, typename Res>
Solution run(const SolverConfig& cfg, Sweep sweep, Res res) {
  Solution sol;
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
  return sol;
}

}  // namespace

Bounds Bounds::nonnegative(Index m) {
  const auto n = static_cast<EIndex>(m);
  return {Vector::Zero(n),
          Vector::Constant(n, std::numeric_limits<double>::infinity())};
}

void Bounds::validate(Index m) const {
  require_size(lower, m, "lower bound");
  require_size(upper, m, "upper bound");
  for (EIndex i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      std::ostringstream os;
      os << "bounds require l < u, got l = " << lower[i] << ", u = " << upper[i]
         << " at index " << i;
      throw std::invalid_argument(os.str());
    }
  }
}

bool Bounds::has_negative_lower() const {
  return lower.size() > 0 && lower.minCoeff() < 0.0;
}

Vector p_blcp(const Vector& x, const Vector& lower, const Vector& upper) {
  if (x.size() != lower.size() || x.size() != upper.size()) {
    throw DimensionError("p_blcp: length mismatch");
  }
  Vector out(x.size());
  for (EIndex i = 0; i < x.size(); ++i) {
    out[i] = std::min(std::max(lower[i], x[i]), upper[i]);
  }
  return out;
}

double boxed_residual(const Vector& lambda, const Vector& w, const Bounds& bounds) {
  if (lambda.size() != w.size()) {
    throw DimensionError("boxed_residual: length mismatch");
  }
  require_size(bounds.lower, static_cast<Index>(lambda.size()), "lower bound");
  require_size(bounds.upper, static_cast<Index>(lambda.size()), "upper bound");
  double sum = 0.0;
  for (EIndex i = 0; i < lambda.size(); ++i) {
    const double l = bounds.lower[i];
    const double u = bounds.upper[i];
    double r;
    if (l == 0.0 && std::isinf(u) && u > 0.0) {
      r = std::min(lambda[i], w[i]);
    } else {
      r = lambda[i] - std::min(std::max(l, lambda[i] - w[i]), u);
    }
    sum += r * r;
  }
  return std::sqrt(sum);
}

ContactLcp::ContactLcp(SparseMatrix jacobian, BlockDiagInverseMass inv_mass,
                       Vector v, Vector b)
    : j_(std::move(jacobian)),
      inv_mass_(std::move(inv_mass)),
      v_(std::move(v)),
      b_(std::move(b)) {
  require_size(v_, j_.cols(), "generalized velocity v");
  require_size(b_, j_.rows(), "bias b");
  mhat_ = build_mhat(j_, inv_mass_);
  mhat_t_ = mhat_.transpose();
  a_diag_.resize(static_cast<EIndex>(j_.rows()));
  for (Index i = 0; i < j_.rows(); ++i) {
    // A_ii = J_i* . Mhat_*i; both rows are sorted, so merge.
    const auto jc = j_.row_cols(i);
    const auto jv = j_.row_values(i);
    const auto mc = mhat_t_.row_cols(i);
    const auto mv = mhat_t_.row_values(i);
    double d = 0.0;
    Index p = 0, r = 0;
    while (p < jc.size() && r < mc.size()) {
      if (jc[p] == mc[r]) {
        d += jv[p++] * mv[r++];
      } else if (jc[p] < mc[r]) {
        ++p;
      } else {
        ++r;
      }
    }
    if (!(d > 0.0)) {
      std::ostringstream os;
      os << "constraint row " << i << " is degenerate: A_ii = " << d;
      throw NonPositiveDiagonal(i, d, os.str());
    }
    a_diag_[static_cast<EIndex>(i)] = d;
  }
  fused_ = fuse_rows(j_, mhat_t_);
}

Vector ContactLcp::applied_velocity(const Vector& lambda) const {
  require_size(lambda, rows(), "lambda");
  return v_ + spmv(mhat_, lambda);
}

Vector ContactLcp::constraint_velocity(const Vector& lambda) const {
  return spmv(j_, applied_velocity(lambda)) + b_;
}

double ContactLcp::residual(const Vector& lambda) const {
  return amgs::residual(lambda, constraint_velocity(lambda));
}

LcpProblem ContactLcp::densify() const {
  Matrix a = j_.to_dense() * mhat_.to_dense();
  // Symmetrize away the rounding asymmetry of the two-sided product.
  a = 0.5 * (a + a.transpose()).eval();
  return LcpProblem(std::move(a), spmv(j_, v_) + b_);
}

ContactAmgs::ContactAmgs(const ContactLcp& prob, const Vector& lambda0,
                         const SolverConfig& cfg, std::optional<Bounds> bounds)
    : prob_(&prob), bounds_(std::move(bounds)), gamma_(cfg.gamma) {
  const Index m = prob.rows();
  require_size(lambda0, m, "lambda0");
  cfg.validate();
  Vector lam = lambda0;
  if (bounds_) {
    bounds_->validate(m);
    lam = p_blcp(lam, bounds_->lower, bounds_->upper);
  } else if (m > 0 && lam.minCoeff() < 0.0) {
    throw std::invalid_argument("lambda0 must be nonnegative");
  }
  const Vector omega = omega_diagonal(cfg, prob.a_diag());
  step_ = gamma_ * (prob.a_diag() + gamma_ * omega).cwiseInverse();
  two_omega_ = 2.0 * omega;
  state_.x = (gamma_ / 2.0) * lam;
  state_.v_acc = prob.applied_velocity(lam);
  state_.lambda = std::move(lam);
}

namespace {

// One AMGS sweep over raw CSR arrays. `Boxed` selects the projection so the
// unbounded path carries no per-row branch on the bounds.
template <bool Boxed>
Index sweep_rows(const SparseMatrix& j, const SparseMatrix& mcols, const double* b,
                 const double* step, const double* two_omega, const double* lower,
                 const double* upper, double s, double* x, double* lam, double* v) {
  const Index m = j.rows();
  const Index* joff = j.row_offsets().data();
  const Index* jcol = j.col_indices().data();
  const double* jval = j.values().data();
  const Index* moff = mcols.row_offsets().data();
  const Index* mcol = mcols.col_indices().data();
  const double* mval = mcols.values().data();
  Index flops = 0;
  for (Index i = 0; i < m; ++i) {
    // J_i* v^{k+1,i} equals (A lambda^{k+1,i})_i + q_i
    double sum = b[i];
    for (Index p = joff[i]; p < joff[i + 1]; ++p) {
      sum += jval[p] * v[jcol[p]];
    }
    sum -= two_omega[i] * std::max(0.0, -x[i]);
    const double xi = x[i] - step[i] * sum;
    x[i] = xi;
    const double next = Boxed ? std::min(std::max(lower[i], s * xi), upper[i])
                              : s * std::max(0.0, xi);
    const double delta = next - lam[i];
    if (delta != 0.0) {
      for (Index p = moff[i]; p < moff[i + 1]; ++p) {
        v[mcol[p]] += delta * mval[p];
      }
      flops += moff[i + 1] - moff[i];
    }
    lam[i] = next;
    flops += joff[i + 1] - joff[i];
  }
  return flops;
}

// Same sweep over the fused layout: one index stream serves both the row
// dot product and the column update.
template <bool Boxed>
Index sweep_fused(const FusedRows& f, const double* b, const double* step,
                  const double* two_omega, const double* lower, const double* upper,
                  double s, Index m, double* x, double* lam, double* v) {
  const Index* off = f.offsets.data();
  const std::uint32_t* col = f.cols.data();
  const double* jval = f.j.data();
  const double* mval = f.mhat.data();
  Index flops = 0;
  for (Index i = 0; i < m; ++i) {
    const Index lo = off[i], hi = off[i + 1];
    double sum = b[i];
    for (Index p = lo; p < hi; ++p) {
      sum += jval[p] * v[col[p]];
    }
    sum -= two_omega[i] * std::max(0.0, -x[i]);
    const double xi = x[i] - step[i] * sum;
    x[i] = xi;
    const double next = Boxed ? std::min(std::max(lower[i], s * xi), upper[i])
                              : s * std::max(0.0, xi);
    const double delta = next - lam[i];
    if (delta != 0.0) {
      for (Index p = lo; p < hi; ++p) {
        v[col[p]] += delta * mval[p];
      }
      flops += hi - lo;
    }
    lam[i] = next;
    flops += hi - lo;
  }
  return flops;
}

}  // namespace

void ContactAmgs::sweep() {
  const double s = 2.0 / gamma_;
  double* v = state_.v_acc.data();
  double* x = state_.x.data();
  double* lam = state_.lambda.data();
  const double* b = prob_->bias().data();
  const double* lower = bounds_ ? bounds_->lower.data() : nullptr;
  const double* upper = bounds_ ? bounds_->upper.data() : nullptr;
  if (const auto& fused = prob_->fused_rows()) {
    const Index m = prob_->rows();
    flops_ += bounds_ ? sweep_fused<true>(*fused, b, step_.data(), two_omega_.data(), lower,
                                          upper, s, m, x, lam, v)
                      : sweep_fused<false>(*fused, b, step_.data(), two_omega_.data(),
                                           nullptr, nullptr, s, m, x, lam, v);
  } else if (bounds_) {
    flops_ += sweep_rows<true>(prob_->jacobian(), prob_->mhat_columns(), b, step_.data(),
                               two_omega_.data(), lower, upper, s, x, lam, v);
  } else {
    flops_ += sweep_rows<false>(prob_->jacobian(), prob_->mhat_columns(), b, step_.data(),
                                two_omega_.data(), nullptr, nullptr, s, x, lam, v);
  }
  ++sweeps_;
}

double ContactAmgs::residual() const {
  Vector w = spmv(prob_->jacobian(), state_.v_acc) + prob_->bias();
  if (bounds_) {
    return boxed_residual(state_.lambda, w, *bounds_);
  }
  return amgs::residual(state_.lambda, w);
}

namespace {

Solution finish(Solution sol, const ContactLcp& prob, const SweepState& st) {
  sol.x = st.x;
  sol.lambda = st.lambda;
  sol.w = spmv(prob.jacobian(), st.v_acc) + prob.bias();
  return sol;
}

}  // namespace

Solution amgs_contact_solve(const ContactLcp& prob, const Vector& lambda0,
                            const SolverConfig& cfg) {
  ContactAmgs solver(prob, lambda0, cfg);
  Solution sol = run(cfg, [&] { solver.sweep(); }, [&] { return solver.residual(); });
  return finish(std::move(sol), prob, solver.state());
}

Solution amgs_boxed_solve(const ContactLcp& prob, const Bounds& bounds,
                          const Vector& lambda0, const SolverConfig& cfg) {
  ContactAmgs solver(prob, lambda0, cfg, bounds);
  Solution sol = run(cfg, [&] { solver.sweep(); }, [&] { return solver.residual(); });
  return finish(std::move(sol), prob, solver.state());
}

Solution pgs_contact_solve(const ContactLcp& prob, const Vector& lambda0,
                           const SolverConfig& cfg,
                           const std::optional<Bounds>& bounds) {
  const Index m = prob.rows();
  require_size(lambda0, m, "lambda0");
  Vector lam = lambda0;
  if (bounds) {
    bounds->validate(m);
    lam = p_blcp(lam, bounds->lower, bounds->upper);
  } else if (m > 0 && lam.minCoeff() < 0.0) {
    throw std::invalid_argument("lambda0 must be nonnegative");
  }
  const SparseMatrix& j = prob.jacobian();
  const SparseMatrix& mcols = prob.mhat_columns();
  const Vector& b = prob.bias();
  const Vector& d = prob.a_diag();
  Vector v = prob.applied_velocity(lam);

  auto res = [&] {
    Vector w = spmv(j, v) + b;
    return bounds ? boxed_residual(lam, w, *bounds) : amgs::residual(lam, w);
  };
  Solution sol = run(
      cfg,
      [&] {
        for (EIndex i = 0; i < lam.size(); ++i) {
          const auto row = static_cast<Index>(i);
          const double w = j.row_dot(row, v.data()) + b[i];
          double next = lam[i] - w / d[i];
          next = bounds ? std::min(std::max(bounds->lower[i], next), bounds->upper[i])
                        : std::max(0.0, next);
          const double delta = next - lam[i];
          if (delta != 0.0) {
            mcols.add_scaled_row(row, delta, v.data());
          }
          lam[i] = next;
        }
      },
      res);
  sol.lambda = lam;
  sol.w = spmv(j, v) + b;
  return sol;
}

}  // namespace amgs
