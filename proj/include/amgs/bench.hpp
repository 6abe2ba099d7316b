#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "amgs/rigidbody2d.hpp"

namespace amgs::bench {

enum class ScenarioName { Pool1, Pool2, Stacking };

ScenarioName parse_scenario(const std::string& name);
std::string scenario_name(ScenarioName name);

struct ScenarioSpec {
  ScenarioName name = ScenarioName::Pool1;
  Index circle_count = 221;
  double radius = 0.21;
  double mass_min = 2.0;  // pool2 ramps mass linearly with height
  double mass_max = 2.0;
  double friction = 0.1;
  double restitution = 0.2;
  double area_width = 6.0;
  std::uint64_t seed = 1;
  Index steps = 100;
  Index iters_per_step = 10;
  double dt = 1.0 / 60.0;

  static ScenarioSpec defaults(ScenarioName name);
  void validate() const;
};

/// Deterministic for a given spec. Pools: jittered lattice between a floor
/// and two side walls. Stacking: one vertical column over a floor with 1 mm
/// gaps. Throws GeometryError when the circles do not fit.
rb::Scene build_scenario(const ScenarioSpec& spec);

/// One solver configuration. `alpha` is set for Omega = alpha D and empty
/// for PGS and for the averaged-diagonal Omega.
struct SolverRun {
  rb::SolverKind kind = rb::SolverKind::Pgs;
  SolverConfig config;
  std::optional<double> alpha;

  static SolverRun pgs();
  static SolverRun amgs(rb::SolverKind kind, double alpha, double gamma = 2.0);
  static SolverRun amgs_average(rb::SolverKind kind, double gamma = 2.0);
  /// e.g. `amgs[alpha=0.5]`, `amgs[avg]`, `pgs`.
  std::string label() const;
};

struct StepRecord {
  Index step = 0;  // 1-based
  Index iters = 0;
  double residual = 0.0;
  Index rows = 0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  std::string solver;
  std::optional<double> alpha;
  std::vector<StepRecord> per_step;
  /// RES(lambda^{(t),k}) for k = 0..deep_iters at the deep step.
  std::vector<double> per_iter;
  /// Iterations to RES < tol at the deep step; empty if the cap was hit.
  std::optional<Index> iterations_to_tol;
  double time_to_tol_ms = 0.0;
  double total_wall_ms = 0.0;
};

struct StepwiseOptions {
  Index deep_step = 100;
  Index deep_iters = 200;
  double tol = 1e-4;
  Index max_timed_iterations = 200000;
  bool timed = true;
  /// Called with the deep-step problem before the solver runs.
  std::function<void(const rb::PreparedStep&)> inspect;
};

struct StepwiseResult {
  SolveTrace driver;  // PGS, iters_per_step, steps 1..deep_step-1
  std::vector<SolveTrace> solvers;
};

/// Frictionless run to `deep_step`; at that step every solver starts from
/// the same lambda0 on the same assembled problem.
StepwiseResult run_stepwise_experiment(const ScenarioSpec& spec,
                                       const std::vector<SolverRun>& runs,
                                       const StepwiseOptions& options);

/// Thread cap from BENCH_THREADS, else the hardware concurrency.
unsigned bench_threads();

/// Full simulation per run, in parallel up to `threads`.
std::vector<SolveTrace> run_entire_simulation(const ScenarioSpec& spec,
                                              const std::vector<SolverRun>& runs,
                                              bool frictionless = false,
                                              unsigned threads = 0);

/// `step,solver,alpha,iters,residual,wall_ms` with 17 significant digits;
/// `wall_ms` is dropped when `include_wall` is false.
std::string format_step_csv(const std::vector<SolveTrace>& traces,
                            bool include_wall = true);
std::vector<SolveTrace> parse_step_csv(const std::string& text);

/// `iter,solver,alpha,residual` for the deep-step iterations.
std::string format_iteration_csv(const std::vector<SolveTrace>& traces);

/// `solver,alpha,iterations_to_tol,time_ms`
std::string format_summary_csv(const std::vector<SolveTrace>& traces);

/// Log-scale polyline plot; values below 1e-16 are drawn at 1e-16.
std::string render_svg(const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& series,
                       const std::string& title, const std::string& x_label);

inline constexpr double kPlotFloor = 1e-16;

/// Writes `<stem>.csv` and `<stem>.svg` (per-step residuals).
void emit_report(const std::filesystem::path& dir, const std::string& stem,
                 const std::vector<SolveTrace>& traces);

/// Writes `<stem>_iter.csv`, `<stem>_iter.svg` and `<stem>_summary.csv`.
void emit_stepwise_report(const std::filesystem::path& dir, const std::string& stem,
                          const StepwiseResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace amgs::bench
