// Scenario runner and offline solver driver.
//
//   bench run --scenario pool1 --solver pgs --solver amgs --alpha 0.2,0.5 --out out
//   bench solve --problem out/lcp_step_100 --solver amgs --iters 500
//   bench certificate --problem out/lcp_step_100 --alpha 0.5

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "amgs/bench.hpp"
#include "amgs/certificate.hpp"
#include "amgs/matrix_market.hpp"
#include "amgs/problem_io.hpp"

namespace fs = std::filesystem;
using namespace amgs;

namespace {

struct OmegaArgs {
  std::string omega = "alphaD";
  std::vector<double> alphas{0.5};
  double gamma = 2.0;
};

void add_omega_options(CLI::App* app, OmegaArgs& args) {
  app->add_option("--omega", args.omega, "Omega choice: avg (mean(D)/gamma E) or alphaD")
      ->check(CLI::IsMember({"avg", "alphaD"}))
      ->capture_default_str();
  app->add_option("--alpha", args.alphas, "alpha values for Omega = alpha D")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--gamma", args.gamma, "gamma")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

std::vector<bench::SolverRun> expand_runs(const std::vector<std::string>& solvers,
                                          const OmegaArgs& args) {
  std::vector<bench::SolverRun> runs;
  for (const std::string& name : solvers) {
    const rb::SolverKind kind = rb::parse_solver(name);
    if (kind == rb::SolverKind::Pgs) {
      runs.push_back(bench::SolverRun::pgs());
    } else if (args.omega == "avg") {
      runs.push_back(bench::SolverRun::amgs_average(kind, args.gamma));
    } else {
      for (double a : args.alphas) {
        runs.push_back(bench::SolverRun::amgs(kind, a, args.gamma));
      }
    }
  }
  return runs;
}

SolverConfig single_config(const OmegaArgs& args) {
  SolverConfig cfg;
  cfg.gamma = args.gamma;
  if (args.omega == "avg") {
    cfg.omega = AverageDiagonalOmega{};
  } else {
    if (args.alphas.size() != 1) {
      throw CLI::ValidationError("--alpha", "exactly one value expected here");
    }
    cfg.omega = ScaledDiagonalOmega{args.alphas.front()};
  }
  return cfg;
}

std::string cert_block(const std::string& label, const ConvergenceCertificate& c) {
  return "solver=" + label + "\n" + format_certificate(c) + "\n";
}

void print_summary(const bench::StepwiseResult& result, double tol) {
  std::printf("%-24s %10s %14s %12s\n", "solver", "iters<tol", "time [ms]", "RES@deep");
  for (const auto& t : result.solvers) {
    const std::string label =
        t.alpha ? t.solver + "[alpha=" + std::to_string(*t.alpha).substr(0, 5) + "]"
                : t.solver;
    const std::string iters =
        t.iterations_to_tol ? std::to_string(*t.iterations_to_tol) : "cap";
    std::printf("%-24s %10s %14.3f %12.4e\n", label.c_str(), iters.c_str(),
                t.time_to_tol_ms, t.per_step.front().residual);
  }
  std::printf("(iterations until RES < %g)\n", tol);
}

int run_command(const bench::ScenarioSpec& base, const std::vector<std::string>& solvers,
                const OmegaArgs& omega, bool frictionless, Index deep_step,
                Index deep_iters, Index max_timed, bool timed, bool dump_lcp,
                bool want_certificate, const fs::path& out) {
  const std::vector<bench::SolverRun> runs = expand_runs(solvers, omega);
  const std::string stem = bench::scenario_name(base.name);
  fs::create_directories(out);

  if (base.steps > 0) {
    const auto traces = bench::run_entire_simulation(base, runs, frictionless);
    bench::emit_report(out, stem + "_steps", traces);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::printf("%-24s %8zu steps %12.1f ms total\n", runs[i].label().c_str(),
                  traces[i].per_step.size(), traces[i].total_wall_ms);
    }
  }
  if (deep_step == 0) {
    return 0;
  }
  if (deep_step > base.steps) {
    throw CLI::ValidationError("--deep-step", "must not exceed --steps");
  }

  bench::StepwiseOptions opts;
  opts.deep_step = deep_step;
  opts.deep_iters = deep_iters;
  opts.max_timed_iterations = max_timed;
  opts.timed = timed;
  std::string certificates;
  opts.inspect = [&](const rb::PreparedStep& prepared) {
    std::printf("deep step %zu: m = %zu rows, n = %zu dofs\n", deep_step,
                prepared.lcp.problem.rows(), prepared.lcp.problem.dofs());
    if (dump_lcp) {
      const fs::path dir = out / ("lcp_step_" + std::to_string(deep_step));
      io::save_contact(dir, prepared.lcp.problem, prepared.lcp.bounds);
      mm::save_vector(dir / "lambda0.mtx", prepared.lambda0);
    }
    if (want_certificate && prepared.lcp.problem.rows() > 0) {
      const LcpProblem dense = prepared.lcp.problem.densify();
      for (const auto& run : runs) {
        if (run.kind == rb::SolverKind::Pgs) {
          continue;
        }
        certificates += cert_block(run.label(), certificate(dense.a(), run.config));
      }
    }
  };
  const bench::StepwiseResult result = bench::run_stepwise_experiment(base, runs, opts);
  if (deep_iters > 0 || timed) {
    bench::emit_stepwise_report(out, stem + "_deep", result);
  }
  if (want_certificate) {
    bench::write_text(out / "certificate.txt", certificates);
  }
  print_summary(result, opts.tol);
  return 0;
}

int solve_command(const fs::path& problem, const std::string& solver,
                  const OmegaArgs& omega, Index iters, double tol,
                  const std::string& history) {
  SolverConfig cfg = single_config(omega);
  cfg.max_iterations = iters;
  cfg.residual_tol = tol;
  cfg.record_history = !history.empty();
  const rb::SolverKind kind = rb::parse_solver(solver);

  Solution sol;
  double initial = 0.0;
  double final_res = 0.0;
  if (io::is_contact_dir(problem)) {
    const io::LoadedContact loaded = io::load_contact(problem);
    rb::PreparedStep prepared{
        rb::AssembledLcp{loaded.problem, loaded.bounds, {}},
        fs::exists(problem / "lambda0.mtx") ? mm::load_vector(problem / "lambda0.mtx")
                                            : Vector::Zero(static_cast<Eigen::Index>(
                                                  loaded.problem.rows()))};
    initial = rb::assembled_residual(prepared.lcp, prepared.lambda0);
    sol = rb::solve_prepared(prepared, kind, cfg);
    final_res = sol.lambda.size() > 0 ? rb::assembled_residual(prepared.lcp, sol.lambda)
                                      : initial;
  } else {
    const io::LoadedLcp loaded = io::load_lcp(problem);
    if (loaded.bounds) {
      throw std::invalid_argument("boxed dense problems are not supported by solve");
    }
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(loaded.problem.size()));
    initial = residual(loaded.problem, zero);
    switch (kind) {
      case rb::SolverKind::Pgs:
        sol = pgs_solve(loaded.problem, zero, cfg);
        break;
      case rb::SolverKind::AmgsDense:
      case rb::SolverKind::Amgs:
      case rb::SolverKind::AmgsBoxed:
        sol = amgs_dense_solve(loaded.problem, zero, cfg);
        break;
    }
    final_res = sol.lambda.size() > 0 ? residual(loaded.problem, sol.lambda) : initial;
  }
  std::printf("iterations=%zu\nresidual=%.17g\nconverged=%s\n", sol.iterations,
              final_res, sol.converged ? "true" : "false");
  if (!history.empty()) {
    io::save_residual_history(history, sol.residual_history, initial);
  }
  return 0;
}

int certificate_command(const fs::path& problem, const OmegaArgs& omega) {
  SolverConfig cfg = single_config(omega);
  Matrix a;
  bool negative_lower = false;
  if (io::is_contact_dir(problem)) {
    const io::LoadedContact loaded = io::load_contact(problem);
    a = loaded.problem.densify().a();
    negative_lower = loaded.bounds && loaded.bounds->has_negative_lower();
  } else {
    const io::LoadedLcp loaded = io::load_lcp(problem);
    a = loaded.problem.a();
    negative_lower = loaded.bounds && loaded.bounds->has_negative_lower();
  }
  std::cout << format_certificate(certificate(a, cfg, negative_lower));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMGS contact solver benchmarks"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "simulate a scenario and compare solvers");
  std::string scenario = "pool1";
  std::vector<std::string> solvers{"pgs", "amgs"};
  OmegaArgs omega;
  Index steps = 100, iters = 10, deep_step = 100, deep_iters = 200;
  Index max_timed = 200000;
  std::optional<Index> circles;
  std::uint64_t seed = 1;
  double dt = 1.0 / 60.0;
  bool frictionless = false, dump_lcp = false, want_certificate = false, no_timed = false;
  std::string out = "bench_out";
  run->add_option("--scenario", scenario, "pool1, pool2 or stacking")
      ->check(CLI::IsMember({"pool1", "pool2", "stacking"}))
      ->capture_default_str();
  run->add_option("--solver", solvers, "pgs, amgs-dense, amgs or amgs-boxed (repeatable)")
      ->check(CLI::IsMember({"pgs", "amgs-dense", "amgs", "amgs-boxed"}))
      ->capture_default_str();
  add_omega_options(run, omega);
  run->add_option("--steps", steps, "simulation steps")->capture_default_str();
  run->add_option("--iters", iters, "solver iterations per step")->capture_default_str();
  run->add_option("--deep-step", deep_step, "step of the per-iteration comparison (0: off)")
      ->capture_default_str();
  run->add_option("--deep-iters", deep_iters, "iterations recorded at the deep step")
      ->capture_default_str();
  run->add_option("--max-timed-iters", max_timed, "cap for the iterations-to-1e-4 run")
      ->capture_default_str();
  run->add_flag("--no-timed", no_timed, "skip the iterations-to-1e-4 run");
  run->add_option("--circles", circles, "override the scenario circle count");
  run->add_option("--dt", dt, "time step [s]")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--frictionless", frictionless, "set friction to zero for the whole run");
  run->add_option("--seed", seed, "placement seed")->capture_default_str();
  run->add_option("--out", out, "output directory")->capture_default_str();
  run->add_flag("--dump-lcp", dump_lcp, "write the deep-step problem as MatrixMarket files");
  run->add_flag("--certificate", want_certificate, "write certificate.txt for the deep step");

  // solve
  auto* solve = app.add_subcommand("solve", "solve a dumped problem directory");
  std::string problem, solver = "amgs", history;
  OmegaArgs solve_omega;
  Index solve_iters = 1000;
  double tol = 1e-4;
  solve->add_option("--problem", problem, "problem directory")->required();
  solve->add_option("--solver", solver, "solver")
      ->check(CLI::IsMember({"pgs", "amgs-dense", "amgs", "amgs-boxed"}))
      ->capture_default_str();
  add_omega_options(solve, solve_omega);
  solve->add_option("--iters", solve_iters, "iteration cap")->capture_default_str();
  solve->add_option("--tol", tol, "stop once RES <= tol")->capture_default_str();
  solve->add_option("--history", history, "write iter,residual CSV here");

  // certificate
  auto* cert = app.add_subcommand("certificate", "convergence certificate of a problem");
  std::string cert_problem;
  OmegaArgs cert_omega;
  cert->add_option("--problem", cert_problem, "problem directory")->required();
  add_omega_options(cert, cert_omega);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      bench::ScenarioSpec spec =
          bench::ScenarioSpec::defaults(bench::parse_scenario(scenario));
      if (circles) {
        spec.circle_count = *circles;
      }
      spec.seed = seed;
      spec.steps = steps;
      spec.iters_per_step = iters;
      spec.dt = dt;
      return run_command(spec, solvers, omega, frictionless, deep_step, deep_iters,
                         max_timed, !no_timed, dump_lcp, want_certificate, out);
    }
    if (*solve) {
      return solve_command(problem, solver, solve_omega, solve_iters, tol, history);
    }
    if (*cert) {
      return certificate_command(cert_problem, cert_omega);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
