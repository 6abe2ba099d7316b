#include "amgs/rigidbody2d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace amgs::rb {
namespace {

using EIndex = Eigen::Index;

double cross(const Vec2& r, const Vec2& n) { return r.x() * n.y() - r.y() * n.x(); }

EIndex dof(Index body, Index k) { return static_cast<EIndex>(kDofPerBody * body + k); }

void add_row(std::vector<Triplet>& trips, Index row, const Scene& scene,
             const Contact& c, const Vec2& dir) {
  const Body& a = scene.bodies[c.body_a];
  const Body& b = scene.bodies[c.body_b];
  if (!a.is_static()) {
    const Vec2 ra = c.point - a.position;
    trips.push_back({row, kDofPerBody * c.body_a + 0, -dir.x()});
    trips.push_back({row, kDofPerBody * c.body_a + 1, -dir.y()});
    trips.push_back({row, kDofPerBody * c.body_a + 2, -cross(ra, dir)});
  }
  if (!b.is_static()) {
    const Vec2 rb = c.point - b.position;
    trips.push_back({row, kDofPerBody * c.body_b + 0, dir.x()});
    trips.push_back({row, kDofPerBody * c.body_b + 1, dir.y()});
    trips.push_back({row, kDofPerBody * c.body_b + 2, cross(rb, dir)});
  }
}

// Relative velocity of b with respect to a at the contact point along dir.
double relative_velocity(const Scene& scene, const Contact& c, const Vec2& dir) {
  auto point_velocity = [&](const Body& body) {
    const Vec2 r = c.point - body.position;
    return Vec2(body.linear_velocity.x() - body.angular_velocity * r.y(),
                body.linear_velocity.y() + body.angular_velocity * r.x());
  };
  return dir.dot(point_velocity(scene.bodies[c.body_b]) -
                 point_velocity(scene.bodies[c.body_a]));
}

void project_positions(Scene& scene) {
  for (const Contact& c : detect_contacts(scene)) {
    Body& a = scene.bodies[c.body_a];
    Body& b = scene.bodies[c.body_b];
    const double w = a.inv_mass + b.inv_mass;
    if (w == 0.0) {
      continue;
    }
    a.position -= (c.depth * a.inv_mass / w) * c.normal;
    b.position += (c.depth * b.inv_mass / w) * c.normal;
  }
}

}  // namespace

Body Body::circle(Index id, double mass, double radius, const Vec2& position) {
  if (!(mass > 0.0) || !(radius > 0.0)) {
    throw std::invalid_argument("circle needs positive mass and radius");
  }
  Body b;
  b.id = id;
  b.inv_mass = 1.0 / mass;
  b.inv_inertia = 1.0 / (0.5 * mass * radius * radius);
  b.position = position;
  b.shape = Circle{radius};
  return b;
}

Body Body::wall(Index id, const Vec2& point, const Vec2& normal) {
  const double len = normal.norm();
  if (!(len > 0.0)) {
    throw std::invalid_argument("wall normal must be nonzero");
  }
  Body b;
  b.id = id;
  b.position = point;
  b.shape = HalfPlane{normal / len};
  return b;
}

Index Scene::dynamic_count() const {
  return static_cast<Index>(std::count_if(bodies.begin(), bodies.end(),
                                          [](const Body& b) { return !b.is_static(); }));
}

void Scene::validate() const {
  for (Index i = 0; i < bodies.size(); ++i) {
    const Body& b = bodies[i];
    if (b.id != i) {
      throw std::invalid_argument("body ids must equal their position in the scene");
    }
    if (b.inv_mass < 0.0 || b.inv_inertia < 0.0) {
      throw std::invalid_argument("inverse mass and inertia must be nonnegative");
    }
    if (const Circle* c = b.as_circle(); c && !(c->radius > 0.0)) {
      throw std::invalid_argument("circle radius must be positive");
    }
    if (b.as_half_plane() && !b.is_static()) {
      throw std::invalid_argument("half-planes must be static");
    }
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("dt must be positive");
  }
  if (!(restitution >= 0.0 && restitution <= 1.0)) {
    throw std::invalid_argument("restitution must lie in [0, 1]");
  }
  if (!(friction >= 0.0)) {
    throw std::invalid_argument("friction must be nonnegative");
  }
}

Vector Scene::velocity() const {
  Vector v(static_cast<EIndex>(dofs()));
  for (Index i = 0; i < bodies.size(); ++i) {
    v[dof(i, 0)] = bodies[i].linear_velocity.x();
    v[dof(i, 1)] = bodies[i].linear_velocity.y();
    v[dof(i, 2)] = bodies[i].angular_velocity;
  }
  return v;
}

void Scene::set_velocity(const Vector& v) {
  if (static_cast<Index>(v.size()) != dofs()) {
    throw DimensionError("velocity length does not match the scene");
  }
  for (Index i = 0; i < bodies.size(); ++i) {
    bodies[i].linear_velocity = Vec2(v[dof(i, 0)], v[dof(i, 1)]);
    bodies[i].angular_velocity = v[dof(i, 2)];
  }
}

BlockDiagInverseMass Scene::inv_mass() const {
  std::vector<Vector> diags;
  diags.reserve(bodies.size());
  for (const Body& b : bodies) {
    diags.push_back(Eigen::Vector3d(b.inv_mass, b.inv_mass, b.inv_inertia));
  }
  return BlockDiagInverseMass::from_diagonals(kDofPerBody, diags);
}

std::vector<Contact> detect_contacts(const Scene& scene) {
  std::vector<Contact> out;
  const auto& bodies = scene.bodies;
  for (Index i = 0; i < bodies.size(); ++i) {
    for (Index j = i + 1; j < bodies.size(); ++j) {
      const Body& p = bodies[i];
      const Body& s = bodies[j];
      if (p.is_static() && s.is_static()) {
        continue;
      }
      const Circle* cp = p.as_circle();
      const Circle* cs = s.as_circle();
      Contact c;
      c.key = {i, j, 0};
      if (cp && cs) {
        const Vec2 d = s.position - p.position;
        const double dist = d.norm();
        const double reach = cp->radius + cs->radius;
        if (!(dist < reach)) {
          continue;
        }
        if (dist == 0.0) {
          std::ostringstream os;
          os << "coincident circle centres for bodies " << i << " and " << j;
          throw GeometryError(os.str());
        }
        c.body_a = i;
        c.body_b = j;
        c.normal = d / dist;
        c.depth = reach - dist;
        const Vec2 on_a = p.position + cp->radius * c.normal;
        const Vec2 on_b = s.position - cs->radius * c.normal;
        c.point = 0.5 * (on_a + on_b);
      } else if (cp || cs) {
        const Body& wall = cp ? s : p;
        const Body& ball = cp ? p : s;
        const HalfPlane* hp = wall.as_half_plane();
        const double r = ball.as_circle()->radius;
        const double dist = hp->normal.dot(ball.position - wall.position);
        if (!(dist < r)) {
          continue;
        }
        c.body_a = wall.id;
        c.body_b = ball.id;
        c.normal = hp->normal;
        c.depth = r - dist;
        // midpoint between the deepest circle point and its projection
        c.point = ball.position - 0.5 * (r + dist) * c.normal;
      } else {
        continue;
      }
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Contact& x, const Contact& y) { return x.key < y.key; });
  return out;
}

AssembledLcp assemble(const Scene& scene, const std::vector<Contact>& contacts,
                      bool with_friction, const WarmStartCache& warm) {
  const Index nc = contacts.size();
  std::vector<Triplet> trips;
  std::vector<RowKey> keys;
  std::vector<double> bias;
  std::vector<double> lower, upper;
  trips.reserve(12 * nc);
  const double inf = std::numeric_limits<double>::infinity();

  for (Index k = 0; k < nc; ++k) {
    const Contact& c = contacts[k];
    add_row(trips, k, scene, c, c.normal);
    const double vn = relative_velocity(scene, c, c.normal);
    const bool bounce = -vn > scene.restitution_threshold;
    bias.push_back(bounce ? scene.restitution * std::min(0.0, vn) : 0.0);
    keys.push_back({c.key, false});
    lower.push_back(0.0);
    upper.push_back(inf);
  }
  if (with_friction && scene.friction > 0.0) {
    for (const Contact& c : contacts) {
      const auto it = warm.find({c.key, false});
      const double normal = it == warm.end() ? 0.0 : std::max(0.0, it->second);
      const double limit = scene.friction * normal;
      if (!(limit > 0.0)) {
        continue;
      }
      const Vec2 t(-c.normal.y(), c.normal.x());
      add_row(trips, keys.size(), scene, c, t);
      bias.push_back(0.0);
      keys.push_back({c.key, true});
      lower.push_back(-limit);
      upper.push_back(limit);
    }
  }

  const Index m = keys.size();
  SparseMatrix j = SparseMatrix::from_triplets(m, scene.dofs(), std::move(trips));
  Vector b = Eigen::Map<const Vector>(bias.data(), static_cast<EIndex>(m));
  ContactLcp prob(std::move(j), scene.inv_mass(), scene.velocity(), std::move(b));
  std::optional<Bounds> bounds;
  if (m > nc) {
    bounds = Bounds{Eigen::Map<const Vector>(lower.data(), static_cast<EIndex>(m)),
                    Eigen::Map<const Vector>(upper.data(), static_cast<EIndex>(m))};
  }
  return {std::move(prob), std::move(bounds), std::move(keys)};
}

Vector warm_start_map(const WarmStartCache& prev, const std::vector<RowKey>& keys,
                      const std::optional<Bounds>& bounds) {
  Vector out(static_cast<EIndex>(keys.size()));
  for (Index i = 0; i < keys.size(); ++i) {
    const auto it = prev.find(keys[i]);
    double v = it == prev.end() ? 0.0 : it->second;
    const auto e = static_cast<EIndex>(i);
    v = bounds ? std::min(std::max(bounds->lower[e], v), bounds->upper[e])
               : std::max(0.0, v);
    out[e] = v;
  }
  return out;
}

SolverKind parse_solver(const std::string& name) {
  if (name == "pgs") return SolverKind::Pgs;
  if (name == "amgs-dense") return SolverKind::AmgsDense;
  if (name == "amgs") return SolverKind::Amgs;
  if (name == "amgs-boxed") return SolverKind::AmgsBoxed;
  throw std::invalid_argument("unknown solver '" + name +
                              "' (expected pgs, amgs-dense, amgs or amgs-boxed)");
}

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::Pgs: return "pgs";
    case SolverKind::AmgsDense: return "amgs-dense";
    case SolverKind::Amgs: return "amgs";
    case SolverKind::AmgsBoxed: return "amgs-boxed";
  }
  return "unknown";
}

PreparedStep prepare_step(Scene& scene, const WarmStartCache& warm, bool frictionless) {
  scene.validate();
  for (Body& b : scene.bodies) {
    if (b.inv_mass > 0.0) {
      b.linear_velocity += scene.dt * scene.gravity;
    }
  }
  const std::vector<Contact> contacts = detect_contacts(scene);
  AssembledLcp lcp = assemble(scene, contacts, !frictionless, warm);
  Vector lambda0 = warm_start_map(warm, lcp.keys, lcp.bounds);
  return {std::move(lcp), std::move(lambda0)};
}

Solution solve_prepared(const PreparedStep& step, SolverKind solver,
                        const SolverConfig& cfg) {
  const ContactLcp& prob = step.lcp.problem;
  const auto& bounds = step.lcp.bounds;
  if (prob.rows() == 0) {
    Solution sol;
    sol.converged = true;
    return sol;
  }
  switch (solver) {
    case SolverKind::Pgs:
      return pgs_contact_solve(prob, step.lambda0, cfg, bounds);
    case SolverKind::AmgsDense:
      if (bounds) {
        throw std::invalid_argument(
            "amgs-dense handles only frictionless problems; run with friction off "
            "or choose amgs-boxed");
      }
      return amgs_dense_solve(prob.densify(), step.lambda0, cfg);
    case SolverKind::Amgs:
      return bounds ? amgs_boxed_solve(prob, *bounds, step.lambda0, cfg)
                    : amgs_contact_solve(prob, step.lambda0, cfg);
    case SolverKind::AmgsBoxed:
      return amgs_boxed_solve(prob, bounds ? *bounds : Bounds::nonnegative(prob.rows()),
                              step.lambda0, cfg);
  }
  throw std::logic_error("unhandled solver kind");
}

double assembled_residual(const AssembledLcp& lcp, const Vector& lambda) {
  const Vector w = lcp.problem.constraint_velocity(lambda);
  return lcp.bounds ? boxed_residual(lambda, w, *lcp.bounds) : residual(lambda, w);
}

void finish_step(Scene& scene, WarmStartCache& warm, const AssembledLcp& lcp,
                 const Vector& lambda) {
  if (lcp.problem.rows() > 0) {
    scene.set_velocity(lcp.problem.applied_velocity(lambda));
  }
  for (Body& b : scene.bodies) {
    b.position += scene.dt * b.linear_velocity;
    b.angle += scene.dt * b.angular_velocity;
  }
  if (scene.position_projection) {
    project_positions(scene);
  }
  warm.clear();
  for (Index i = 0; i < lcp.keys.size(); ++i) {
    warm.emplace(lcp.keys[i], lambda[static_cast<EIndex>(i)]);
  }
}

StepResult step(Scene& scene, const StepOptions& options, WarmStartCache& warm) {
  PreparedStep prepared = prepare_step(scene, warm, options.frictionless);
  const auto start = std::chrono::steady_clock::now();
  Solution sol = solve_prepared(prepared, options.solver, options.config);
  const auto stop = std::chrono::steady_clock::now();

  StepResult out;
  out.rows = prepared.lcp.problem.rows();
  out.iterations = sol.iterations;
  out.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  out.history = std::move(sol.residual_history);
  if (out.rows > 0) {
    out.residual = assembled_residual(prepared.lcp, sol.lambda);
  }
  finish_step(scene, warm, prepared.lcp, out.rows > 0 ? sol.lambda : Vector());
  return out;
}

Vec2 total_linear_momentum(const Scene& scene) {
  Vec2 p = Vec2::Zero();
  for (const Body& b : scene.bodies) {
    if (b.inv_mass > 0.0) {
      p += b.linear_velocity / b.inv_mass;
    }
  }
  return p;
}

std::string snapshot_csv(const Scene& scene) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "body_id,x,y,angle,vx,vy,omega\n";
  for (const Body& b : scene.bodies) {
    os << b.id << ',' << b.position.x() << ',' << b.position.y() << ',' << b.angle
       << ',' << b.linear_velocity.x() << ',' << b.linear_velocity.y() << ','
       << b.angular_velocity << '\n';
  }
  return os.str();
}

}  // namespace amgs::rb
