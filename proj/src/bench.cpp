#include "amgs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace amgs::bench {
namespace {

using Clock = std::chrono::steady_clock;
using rb::Vec2;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string short_number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

Index parse_index(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return static_cast<Index>(v);
}

std::string alpha_field(const std::optional<double>& alpha) {
  return alpha ? format_number(*alpha) : std::string();
}

std::string display_label(const SolveTrace& t) {
  return t.alpha ? t.solver + " alpha=" + short_number(*t.alpha) : t.solver;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

rb::Scene pool_scene(const ScenarioSpec& spec) {
  const double r = spec.radius;
  const double min_pitch = 2.0 * r + 0.005;
  const auto per_row = static_cast<Index>(std::floor(spec.area_width / min_pitch));
  if (per_row < 2) {
    throw rb::GeometryError("circles of radius " + short_number(r) +
                            " do not fit an area " + short_number(spec.area_width) +
                            " m wide");
  }
  // Hexagonal rows alternate per_row and per_row - 1 circles; neighbours are
  // `pitch` apart horizontally and 2r + 0.01 apart along the diagonals.
  const double pitch = spec.area_width / static_cast<double>(per_row);
  const double diag = std::max(pitch, 2.0 * r + 0.01);
  const double rise = std::sqrt(diag * diag - 0.25 * pitch * pitch);
  const double jitter = 0.2 * std::min(pitch - 2.0 * r, 0.01);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> noise(-jitter, jitter);

  std::vector<Vec2> centres;
  centres.reserve(spec.circle_count);
  for (Index row = 0; centres.size() < spec.circle_count; ++row) {
    const bool odd = row % 2 == 1;
    const Index count = odd ? per_row - 1 : per_row;
    const double y = r + 0.005 + static_cast<double>(row) * rise;
    for (Index k = 0; k < count && centres.size() < spec.circle_count; ++k) {
      const double x = pitch * (static_cast<double>(k) + (odd ? 1.0 : 0.5));
      const double jx = noise(rng);
      const double jy = noise(rng);
      centres.emplace_back(x + jx, y + jy);
    }
  }

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (const Vec2& c : centres) {
    ymin = std::min(ymin, c.y());
    ymax = std::max(ymax, c.y());
  }

  rb::Scene scene;
  for (Index i = 0; i < centres.size(); ++i) {
    double mass = spec.mass_min;
    if (spec.mass_max != spec.mass_min && ymax > ymin) {
      mass += (spec.mass_max - spec.mass_min) * (centres[i].y() - ymin) / (ymax - ymin);
    }
    scene.bodies.push_back(rb::Body::circle(i, mass, r, centres[i]));
  }
  const Index n = centres.size();
  scene.bodies.push_back(rb::Body::wall(n, Vec2(0.0, 0.0), Vec2(0.0, 1.0)));
  scene.bodies.push_back(rb::Body::wall(n + 1, Vec2(0.0, 0.0), Vec2(1.0, 0.0)));
  scene.bodies.push_back(
      rb::Body::wall(n + 2, Vec2(spec.area_width, 0.0), Vec2(-1.0, 0.0)));
  return scene;
}

rb::Scene stacking_scene(const ScenarioSpec& spec) {
  const double r = spec.radius;
  if (spec.area_width < 2.0 * r) {
    throw rb::GeometryError("stacking column is wider than the area");
  }
  constexpr double kGap = 0.001;
  rb::Scene scene;
  const double x = 0.5 * spec.area_width;
  for (Index i = 0; i < spec.circle_count; ++i) {
    const double y = r + kGap + static_cast<double>(i) * (2.0 * r + kGap);
    scene.bodies.push_back(rb::Body::circle(i, spec.mass_min, r, Vec2(x, y)));
  }
  scene.bodies.push_back(
      rb::Body::wall(spec.circle_count, Vec2(0.0, 0.0), Vec2(0.0, 1.0)));
  return scene;
}

SolverConfig step_config(const SolverRun& run, Index iters) {
  SolverConfig cfg = run.config;
  cfg.max_iterations = iters;
  cfg.residual_tol = 0.0;
  cfg.record_history = false;
  return cfg;
}

std::string trace_solver(const SolverRun& run) {
  if (run.kind != rb::SolverKind::Pgs &&
      std::holds_alternative<AverageDiagonalOmega>(run.config.omega)) {
    return rb::solver_name(run.kind) + "[avg]";
  }
  return rb::solver_name(run.kind);
}

SolveTrace simulate(const ScenarioSpec& spec, const SolverRun& run, bool frictionless) {
  ScenarioSpec local = spec;
  if (frictionless) {
    local.friction = 0.0;
  }
  rb::Scene scene = build_scenario(local);
  rb::WarmStartCache warm;
  rb::StepOptions options{run.kind, step_config(run, spec.iters_per_step), frictionless};
  SolveTrace trace{trace_solver(run), run.alpha, {}, {}, std::nullopt, 0.0, 0.0};
  const auto start = Clock::now();
  for (Index t = 1; t <= spec.steps; ++t) {
    const rb::StepResult r = rb::step(scene, options, warm);
    trace.per_step.push_back({t, r.iterations, r.residual, r.rows, r.wall_ms});
  }
  trace.total_wall_ms = elapsed_ms(start);
  return trace;
}

}  // namespace

ScenarioName parse_scenario(const std::string& name) {
  if (name == "pool1") return ScenarioName::Pool1;
  if (name == "pool2") return ScenarioName::Pool2;
  if (name == "stacking") return ScenarioName::Stacking;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected pool1, pool2 or stacking)");
}

std::string scenario_name(ScenarioName name) {
  switch (name) {
    case ScenarioName::Pool1: return "pool1";
    case ScenarioName::Pool2: return "pool2";
    case ScenarioName::Stacking: return "stacking";
  }
  return "unknown";
}

ScenarioSpec ScenarioSpec::defaults(ScenarioName name) {
  ScenarioSpec s;
  s.name = name;
  switch (name) {
    case ScenarioName::Pool1:
      break;
    case ScenarioName::Pool2:
      s.mass_min = 1.0;
      s.mass_max = 3.0;
      break;
    case ScenarioName::Stacking:
      s.circle_count = 30;
      s.radius = 0.18;
      s.mass_min = s.mass_max = 1.0;
      s.area_width = 2.0;
      break;
  }
  return s;
}

void ScenarioSpec::validate() const {
  if (circle_count == 0) throw std::invalid_argument("circle_count must be positive");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(mass_min > 0.0) || !(mass_max >= mass_min)) {
    throw std::invalid_argument("masses must satisfy 0 < mass_min <= mass_max");
  }
  if (!(friction >= 0.0)) throw std::invalid_argument("friction must be nonnegative");
  if (!(restitution >= 0.0 && restitution <= 1.0)) {
    throw std::invalid_argument("restitution must lie in [0, 1]");
  }
  if (!(area_width > 0.0)) throw std::invalid_argument("area_width must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

rb::Scene build_scenario(const ScenarioSpec& spec) {
  spec.validate();
  rb::Scene scene =
      spec.name == ScenarioName::Stacking ? stacking_scene(spec) : pool_scene(spec);
  scene.restitution = spec.restitution;
  scene.friction = spec.friction;
  scene.dt = spec.dt;
  scene.validate();
  return scene;
}

SolverRun SolverRun::pgs() { return {rb::SolverKind::Pgs, SolverConfig{}, std::nullopt}; }

SolverRun SolverRun::amgs(rb::SolverKind kind, double alpha, double gamma) {
  SolverRun run{kind, SolverConfig{}, alpha};
  run.config.gamma = gamma;
  run.config.omega = ScaledDiagonalOmega{alpha};
  run.config.validate();
  return run;
}

SolverRun SolverRun::amgs_average(rb::SolverKind kind, double gamma) {
  SolverRun run{kind, SolverConfig{}, std::nullopt};
  run.config.gamma = gamma;
  run.config.omega = AverageDiagonalOmega{};
  run.config.validate();
  return run;
}

std::string SolverRun::label() const {
  const std::string base = trace_solver(*this);
  return alpha ? base + "[alpha=" + short_number(*alpha) + "]" : base;
}

StepwiseResult run_stepwise_experiment(const ScenarioSpec& spec,
                                       const std::vector<SolverRun>& runs,
                                       const StepwiseOptions& options) {
  if (options.deep_step == 0 || options.deep_step > spec.steps) {
    throw std::invalid_argument("deep step must lie in [1, steps]");
  }
  ScenarioSpec local = spec;
  local.friction = 0.0;
  rb::Scene scene = build_scenario(local);
  rb::WarmStartCache warm;

  StepwiseResult result;
  result.driver.solver = "pgs";
  const rb::StepOptions driver{rb::SolverKind::Pgs,
                               step_config(SolverRun::pgs(), spec.iters_per_step), true};
  const auto start = Clock::now();
  for (Index t = 1; t < options.deep_step; ++t) {
    const rb::StepResult r = rb::step(scene, driver, warm);
    result.driver.per_step.push_back({t, r.iterations, r.residual, r.rows, r.wall_ms});
  }
  result.driver.total_wall_ms = elapsed_ms(start);

  const rb::PreparedStep prepared = rb::prepare_step(scene, warm, true);
  if (options.inspect) {
    options.inspect(prepared);
  }
  const Index rows = prepared.lcp.problem.rows();
  const double initial =
      rows > 0 ? rb::assembled_residual(prepared.lcp, prepared.lambda0) : 0.0;

  for (const SolverRun& run : runs) {
    SolveTrace trace{trace_solver(run), run.alpha, {}, {}, std::nullopt, 0.0, 0.0};
    StepRecord rec{options.deep_step, 0, initial, rows, 0.0};
    if (options.deep_iters > 0) {
      SolverConfig cfg = step_config(run, options.deep_iters);
      cfg.record_history = true;
      const auto t0 = Clock::now();
      const Solution sol = rb::solve_prepared(prepared, run.kind, cfg);
      rec.wall_ms = elapsed_ms(t0);
      rec.iters = sol.iterations;
      trace.per_iter.push_back(initial);
      trace.per_iter.insert(trace.per_iter.end(), sol.residual_history.begin(),
                            sol.residual_history.end());
      if (rows > 0) {
        rec.residual = rb::assembled_residual(prepared.lcp, sol.lambda);
      }
    }
    trace.per_step.push_back(rec);
    if (options.timed) {
      SolverConfig cfg = step_config(run, options.max_timed_iterations);
      // strict RES < tol
      cfg.residual_tol = std::nextafter(options.tol, 0.0);
      const auto t0 = Clock::now();
      const Solution sol = rb::solve_prepared(prepared, run.kind, cfg);
      trace.time_to_tol_ms = elapsed_ms(t0);
      if (sol.converged) {
        trace.iterations_to_tol = sol.iterations;
      }
    }
    trace.total_wall_ms = rec.wall_ms;
    result.solvers.push_back(std::move(trace));
  }
  return result;
}

unsigned bench_threads() {
  if (const char* env = std::getenv("BENCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<unsigned>(v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SolveTrace> run_entire_simulation(const ScenarioSpec& spec,
                                              const std::vector<SolverRun>& runs,
                                              bool frictionless, unsigned threads) {
  if (threads == 0) {
    threads = bench_threads();
  }
  std::vector<SolveTrace> out(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index i = next++; i < runs.size(); i = next++) {
      try {
        out[i] = simulate(spec, runs[i], frictionless);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(runs.size()));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < count; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return out;
}

std::string format_step_csv(const std::vector<SolveTrace>& traces, bool include_wall) {
  std::ostringstream os;
  os << "step,solver,alpha,iters,residual" << (include_wall ? ",wall_ms" : "") << '\n';
  for (const SolveTrace& t : traces) {
    for (const StepRecord& r : t.per_step) {
      os << r.step << ',' << t.solver << ',' << alpha_field(t.alpha) << ',' << r.iters
         << ',' << format_number(r.residual);
      if (include_wall) {
        os << ',' << format_number(r.wall_ms);
      }
      os << '\n';
    }
  }
  return os.str();
}

std::vector<SolveTrace> parse_step_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("empty CSV");
  }
  const bool with_wall = line == "step,solver,alpha,iters,residual,wall_ms";
  if (!with_wall && line != "step,solver,alpha,iters,residual") {
    throw std::invalid_argument("unexpected CSV header: " + line);
  }
  std::vector<SolveTrace> out;
  std::map<std::pair<std::string, std::string>, Index> index;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != (with_wall ? 6u : 5u)) {
      throw std::invalid_argument("CSV line " + std::to_string(line_no) +
                                  ": wrong field count");
    }
    const auto key = std::make_pair(f[1], f[2]);
    auto it = index.find(key);
    if (it == index.end()) {
      SolveTrace t;
      t.solver = f[1];
      if (!f[2].empty()) {
        t.alpha = parse_double(f[2]);
      }
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(t));
    }
    StepRecord r;
    r.step = parse_index(f[0]);
    r.iters = parse_index(f[3]);
    r.residual = parse_double(f[4]);
    if (with_wall) {
      r.wall_ms = parse_double(f[5]);
    }
    out[it->second].per_step.push_back(r);
  }
  return out;
}

std::string format_iteration_csv(const std::vector<SolveTrace>& traces) {
  std::ostringstream os;
  os << "iter,solver,alpha,residual\n";
  for (const SolveTrace& t : traces) {
    for (Index k = 0; k < t.per_iter.size(); ++k) {
      os << k << ',' << t.solver << ',' << alpha_field(t.alpha) << ','
         << format_number(t.per_iter[k]) << '\n';
    }
  }
  return os.str();
}

std::string format_summary_csv(const std::vector<SolveTrace>& traces) {
  std::ostringstream os;
  os << "solver,alpha,iterations_to_tol,time_ms\n";
  for (const SolveTrace& t : traces) {
    os << t.solver << ',' << alpha_field(t.alpha) << ',';
    if (t.iterations_to_tol) {
      os << *t.iterations_to_tol;
    }
    os << ',' << format_number(t.time_to_tol_ms) << '\n';
  }
  return os.str();
}

std::string render_svg(const std::vector<std::string>& labels,
                       const std::vector<std::vector<double>>& series,
                       const std::string& title, const std::string& x_label) {
  constexpr double kW = 800, kH = 500, kLeft = 70, kRight = 200, kTop = 40, kBottom = 50;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto clamp = [](double v) { return std::isfinite(v) ? std::max(v, kPlotFloor) : kPlotFloor; };

  Index longest = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    longest = std::max(longest, static_cast<Index>(s.size()));
    for (double v : s) {
      const double l = std::log10(clamp(v));
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
  }
  if (!(lo <= hi)) {
    lo = -16;
    hi = 0;
  }
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1.0);
  const double xmax = longest > 1 ? static_cast<double>(longest - 1) : 1.0;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double i) { return kLeft + pw * i / xmax; };
  auto py = [&](double l) { return kTop + ph * (hi - l) / (hi - lo); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << xml_escape(title)
     << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double step = std::max(1.0, std::ceil((hi - lo) / 10.0));
  for (double d = lo; d <= hi + 1e-9; d += step) {
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(d)
       << "\" y2=\"" << py(d) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(d) + 4
       << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 16 << "\">0</text>\n";
  os << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 16
     << "\" text-anchor=\"end\">" << static_cast<long long>(xmax) << "</text>\n";

  for (Index s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (Index i = 0; i < series[s].size(); ++i) {
      os << (i ? " " : "") << px(static_cast<double>(i)) << ','
         << py(std::log10(clamp(series[s][i])));
    }
    os << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s + 1);
    os << "<line x1=\"" << kW - kRight + 10 << "\" x2=\"" << kW - kRight + 30 << "\" y1=\""
       << ly - 4 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kW - kRight + 36 << "\" y=\"" << ly << "\">"
       << xml_escape(s < labels.size() ? labels[s] : std::string()) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

void emit_report(const std::filesystem::path& dir, const std::string& stem,
                 const std::vector<SolveTrace>& traces) {
  if (traces.empty()) {
    throw std::invalid_argument("emit_report needs at least one trace");
  }
  std::filesystem::create_directories(dir);
  write_text(dir / (stem + ".csv"), format_step_csv(traces));
  std::vector<std::string> labels;
  std::vector<std::vector<double>> series;
  for (const SolveTrace& t : traces) {
    labels.push_back(display_label(t));
    std::vector<double> s;
    for (const StepRecord& r : t.per_step) {
      s.push_back(r.residual);
    }
    series.push_back(std::move(s));
  }
  write_text(dir / (stem + ".svg"),
             render_svg(labels, series, stem + ": residual per step", "step"));
}

void emit_stepwise_report(const std::filesystem::path& dir, const std::string& stem,
                          const StepwiseResult& result) {
  if (result.solvers.empty()) {
    throw std::invalid_argument("emit_stepwise_report needs at least one solver");
  }
  std::filesystem::create_directories(dir);
  write_text(dir / (stem + "_iter.csv"), format_iteration_csv(result.solvers));
  write_text(dir / (stem + "_summary.csv"), format_summary_csv(result.solvers));
  std::vector<std::string> labels;
  std::vector<std::vector<double>> series;
  for (const SolveTrace& t : result.solvers) {
    labels.push_back(display_label(t));
    series.push_back(t.per_iter);
  }
  const Index step = result.solvers.front().per_step.empty()
                         ? 0
                         : result.solvers.front().per_step.front().step;
  write_text(dir / (stem + "_iter.svg"),
             render_svg(labels, series,
                        stem + ": residual per iteration at step " + std::to_string(step),
                        "iteration"));
}

}  // namespace amgs::bench
