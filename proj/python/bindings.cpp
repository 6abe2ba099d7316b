#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>

#include "amgs/bench.hpp"
#include "amgs/certificate.hpp"
#include "amgs/contact.hpp"
#include "amgs/lcp.hpp"
#include "amgs/sparse.hpp"

namespace py = pybind11;
using namespace amgs;

namespace {

SolverConfig make_config(double gamma, const std::string& omega, double alpha,
                         Index max_iterations, double residual_tol, bool record_history) {
  SolverConfig cfg;
  cfg.gamma = gamma;
  if (omega == "alphaD") {
    cfg.omega = ScaledDiagonalOmega{alpha};
  } else if (omega == "avg") {
    cfg.omega = AverageDiagonalOmega{};
  } else if (omega == "scalar") {
    cfg.omega = ScalarOmega{alpha};
  } else {
    throw std::invalid_argument("omega must be 'alphaD', 'avg' or 'scalar'");
  }
  cfg.max_iterations = max_iterations;
  cfg.residual_tol = residual_tol;
  cfg.record_history = record_history;
  cfg.validate();
  return cfg;
}

SparseMatrix sparse_from_coo(Index rows, Index cols, const std::vector<Index>& r,
                             const std::vector<Index>& c, const std::vector<double>& v) {
  if (r.size() != c.size() || r.size() != v.size()) {
    throw DimensionError("row, col and value arrays differ in length");
  }
  std::vector<Triplet> trips;
  trips.reserve(r.size());
  for (Index k = 0; k < r.size(); ++k) {
    trips.push_back({r[k], c[k], v[k]});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(trips));
}

}  // namespace

PYBIND11_MODULE(_amgs, m) {
  m.doc() = "Accelerated modulus-based Gauss-Seidel solvers for contact LCPs";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NonPositiveDiagonal>(m, "NonPositiveDiagonal", PyExc_ValueError);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init(&make_config), py::arg("gamma") = 2.0, py::arg("omega") = "alphaD",
           py::arg("alpha") = 0.5, py::arg("max_iterations") = 10,
           py::arg("residual_tol") = 0.0, py::arg("record_history") = false)
      .def_readwrite("gamma", &SolverConfig::gamma)
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("residual_tol", &SolverConfig::residual_tol)
      .def_readwrite("record_history", &SolverConfig::record_history)
      .def_property_readonly("omega", [](const SolverConfig& c) { return describe(c.omega); });

  py::class_<Solution>(m, "Solution")
      .def_readonly("lam", &Solution::lambda)
      .def_readonly("w", &Solution::w)
      .def_readonly("x", &Solution::x)
      .def_readonly("iterations", &Solution::iterations)
      .def_readonly("residual_history", &Solution::residual_history)
      .def_readonly("converged", &Solution::converged);

  py::class_<SparseMatrix>(m, "SparseMatrix")
      .def_static("from_dense", &SparseMatrix::from_dense)
      .def_static("from_coo", &sparse_from_coo, py::arg("rows"), py::arg("cols"),
                  py::arg("row"), py::arg("col"), py::arg("value"))
      .def_property_readonly("shape",
                             [](const SparseMatrix& a) { return py::make_tuple(a.rows(), a.cols()); })
      .def_property_readonly("nnz", &SparseMatrix::nnz)
      .def("to_dense", &SparseMatrix::to_dense)
      .def("__matmul__", [](const SparseMatrix& a, const Vector& x) { return spmv(a, x); });

  m.def("spectral_norm",
        [](const Matrix& x, double tol, Index max_iter) {
          return spectral_norm(x, tol, max_iter).value;
        },
        py::arg("x"), py::arg("tol") = 1e-10, py::arg("max_iter") = 10000);

  py::class_<LcpProblem>(m, "LcpProblem")
      .def(py::init<Matrix, Vector>(), py::arg("a"), py::arg("q"))
      .def_property_readonly("a", &LcpProblem::a)
      .def_property_readonly("q", &LcpProblem::q)
      .def("residual", [](const LcpProblem& p, const Vector& l) { return residual(p, l); });

  m.def("oracle_solve", &oracle_solve);
  m.def("pgs_solve", &pgs_solve, py::arg("problem"), py::arg("lambda0"), py::arg("config"));
  m.def("amgs_dense_solve", &amgs_dense_solve, py::arg("problem"), py::arg("lambda0"),
        py::arg("config"));

  py::class_<Bounds>(m, "Bounds")
      .def(py::init([](Vector l, Vector u) { return Bounds{std::move(l), std::move(u)}; }),
           py::arg("lower"), py::arg("upper"))
      .def_readonly("lower", &Bounds::lower)
      .def_readonly("upper", &Bounds::upper);

  py::class_<ContactLcp>(m, "ContactLcp")
      .def(py::init([](SparseMatrix j, const std::vector<Vector>& inv_mass_diagonals,
                       Vector v, Vector b) {
             const Index dof = inv_mass_diagonals.empty()
                                   ? 3
                                   : static_cast<Index>(inv_mass_diagonals.front().size());
             return ContactLcp(std::move(j),
                               BlockDiagInverseMass::from_diagonals(dof, inv_mass_diagonals),
                               std::move(v), std::move(b));
           }),
           py::arg("jacobian"), py::arg("inv_mass_diagonals"), py::arg("v"), py::arg("b"))
      .def_property_readonly("rows", &ContactLcp::rows)
      .def_property_readonly("a_diag", &ContactLcp::a_diag)
      .def("residual", &ContactLcp::residual)
      .def("densify", &ContactLcp::densify);

  m.def("amgs_contact_solve", &amgs_contact_solve, py::arg("problem"), py::arg("lambda0"),
        py::arg("config"));
  m.def("amgs_boxed_solve", &amgs_boxed_solve, py::arg("problem"), py::arg("bounds"),
        py::arg("lambda0"), py::arg("config"));
  m.def("pgs_contact_solve", &pgs_contact_solve, py::arg("problem"), py::arg("lambda0"),
        py::arg("config"), py::arg("bounds") = std::nullopt);

  py::class_<ConvergenceCertificate>(m, "ConvergenceCertificate")
      .def_readonly("tau", &ConvergenceCertificate::tau)
      .def_readonly("xi", &ConvergenceCertificate::xi)
      .def_readonly("eta", &ConvergenceCertificate::eta)
      .def_readonly("mu", &ConvergenceCertificate::mu)
      .def_readonly("delta", &ConvergenceCertificate::delta)
      .def_readonly("guaranteed", &ConvergenceCertificate::guaranteed)
      .def_readonly("closed_form_delta", &ConvergenceCertificate::closed_form_delta)
      .def("__str__", &format_certificate);

  m.def("certificate", &certificate, py::arg("a"), py::arg("config"),
        py::arg("negative_lower_bounds") = false);
  m.def("alpha_sweep_certificates", &alpha_sweep_certificates, py::arg("a"),
        py::arg("gamma"), py::arg("alphas"));

  m.def(
      "simulate",
      [](const std::string& scenario, const std::string& solver, double alpha, Index steps,
         Index iters, std::optional<Index> circles, std::uint64_t seed, bool frictionless) {
        auto spec = bench::ScenarioSpec::defaults(bench::parse_scenario(scenario));
        if (circles) {
          spec.circle_count = *circles;
        }
        spec.steps = steps;
        spec.iters_per_step = iters;
        spec.seed = seed;
        const rb::SolverKind kind = rb::parse_solver(solver);
        const bench::SolverRun run = kind == rb::SolverKind::Pgs
                                         ? bench::SolverRun::pgs()
                                         : bench::SolverRun::amgs(kind, alpha);
        const auto traces = bench::run_entire_simulation(spec, {run}, frictionless, 1);
        return bench::format_step_csv(traces, false);
      },
      py::arg("scenario"), py::arg("solver") = "amgs", py::arg("alpha") = 0.5,
      py::arg("steps") = 10, py::arg("iters") = 10, py::arg("circles") = std::nullopt,
      py::arg("seed") = 1, py::arg("frictionless") = false,
      "Runs a scenario and returns the per-step CSV without wall times.");
}
