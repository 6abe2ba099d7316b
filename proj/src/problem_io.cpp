#include "amgs/problem_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "amgs/matrix_market.hpp"

namespace amgs::io {
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + dir.string() + ": " +
                             ec.message());
  }
}

void save_bounds(const fs::path& dir, const std::optional<Bounds>& bounds) {
  if (bounds) {
    mm::save_vector(dir / "l.mtx", bounds->lower);
    mm::save_vector(dir / "u.mtx", bounds->upper);
  }
}

std::optional<Bounds> load_bounds(const fs::path& dir, Index m) {
  const bool has_l = fs::exists(dir / "l.mtx");
  const bool has_u = fs::exists(dir / "u.mtx");
  if (has_l != has_u) {
    throw mm::FormatError(dir.string() + ": l.mtx and u.mtx must come together");
  }
  if (!has_l) {
    return std::nullopt;
  }
  Bounds b{mm::load_vector(dir / "l.mtx"), mm::load_vector(dir / "u.mtx")};
  b.validate(m);
  return b;
}

}  // namespace

void save_lcp(const fs::path& dir, const LcpProblem& prob,
              const std::optional<Bounds>& bounds) {
  ensure_dir(dir);
  mm::save_array(dir / "A.mtx", prob.a());
  mm::save_vector(dir / "q.mtx", prob.q());
  save_bounds(dir, bounds);
}

LoadedLcp load_lcp(const fs::path& dir) {
  LcpProblem prob(mm::load_array(dir / "A.mtx"), mm::load_vector(dir / "q.mtx"));
  auto bounds = load_bounds(dir, prob.size());
  return {std::move(prob), std::move(bounds)};
}

void save_contact(const fs::path& dir, const ContactLcp& prob,
                  const std::optional<Bounds>& bounds) {
  ensure_dir(dir);
  const BlockDiagInverseMass& minv = prob.inv_mass();
  const auto dof = static_cast<Eigen::Index>(minv.dof_per_body());
  Matrix stacked(static_cast<Eigen::Index>(minv.dim()), dof);
  for (Index b = 0; b < minv.body_count(); ++b) {
    stacked.middleRows(static_cast<Eigen::Index>(b) * dof, dof) = minv.block(b);
  }
  mm::save_coordinate(dir / "J.mtx", prob.jacobian());
  mm::save_array(dir / "minv.mtx", stacked);
  mm::save_vector(dir / "v.mtx", prob.velocity());
  mm::save_vector(dir / "b.mtx", prob.bias());
  save_bounds(dir, bounds);
}

LoadedContact load_contact(const fs::path& dir) {
  SparseMatrix j = mm::load_coordinate(dir / "J.mtx");
  const Matrix stacked = mm::load_array(dir / "minv.mtx");
  const Eigen::Index dof = stacked.cols();
  if (dof == 0 || stacked.rows() % dof != 0) {
    throw mm::FormatError((dir / "minv.mtx").string() +
                          ": expected a stack of square blocks");
  }
  std::vector<Matrix> blocks;
  for (Eigen::Index r = 0; r < stacked.rows(); r += dof) {
    blocks.emplace_back(stacked.middleRows(r, dof));
  }
  BlockDiagInverseMass minv(static_cast<Index>(dof), std::move(blocks));
  ContactLcp prob(std::move(j), std::move(minv), mm::load_vector(dir / "v.mtx"),
                  mm::load_vector(dir / "b.mtx"));
  auto bounds = load_bounds(dir, prob.rows());
  return {std::move(prob), std::move(bounds)};
}

bool is_contact_dir(const fs::path& dir) { return fs::exists(dir / "J.mtx"); }

std::string format_residual_history(const std::vector<double>& history,
                                    std::optional<double> initial) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iter,residual\n";
  Index k = 0;
  if (initial) {
    os << k << ',' << *initial << '\n';
  }
  for (double r : history) {
    os << ++k << ',' << r << '\n';
  }
  return os.str();
}

void save_residual_history(const fs::path& path, const std::vector<double>& history,
                           std::optional<double> initial) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << format_residual_history(history, initial);
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace amgs::io
