#pragma once

#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "amgs/contact.hpp"
#include "amgs/lcp.hpp"

namespace amgs::rb {

using Vec2 = Eigen::Vector2d;

inline constexpr Index kDofPerBody = 3;
inline constexpr double kStandardGravity = 9.80665;

struct Circle {
  double radius;
};

// Static wall: the free side is { p : normal . (p - position) >= 0 }.
struct HalfPlane {
  Vec2 normal;
};

using Shape = std::variant<Circle, HalfPlane>;

struct Body {
  Index id = 0;
  double inv_mass = 0.0;
  double inv_inertia = 0.0;
  Vec2 position = Vec2::Zero();
  double angle = 0.0;
  Vec2 linear_velocity = Vec2::Zero();
  double angular_velocity = 0.0;
  Shape shape = Circle{1.0};

  /// Solid disc: inverse inertia (m r^2 / 2)^-1.
  static Body circle(Index id, double mass, double radius, const Vec2& position);
  /// Zero inverse mass and inertia; `point` lies on the boundary line.
  static Body wall(Index id, const Vec2& point, const Vec2& normal);

  bool is_static() const noexcept { return inv_mass == 0.0 && inv_inertia == 0.0; }
  const Circle* as_circle() const noexcept { return std::get_if<Circle>(&shape); }
  const HalfPlane* as_half_plane() const noexcept { return std::get_if<HalfPlane>(&shape); }
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (min id, max id, feature) of a contact; stable across steps.
struct ContactKey {
  Index lo = 0;
  Index hi = 0;
  Index feature = 0;
  auto operator<=>(const ContactKey&) const = default;
};

/// A solver row: the normal row of a contact or its tangent row.
struct RowKey {
  ContactKey contact;
  bool tangent = false;
  auto operator<=>(const RowKey&) const = default;
};

struct Contact {
  Index body_a = 0;
  Index body_b = 0;
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitY();  // unit, from a toward b
  double depth = 0.0;
  ContactKey key;
};

struct Scene {
  std::vector<Body> bodies;  // bodies[i].id == i
  Vec2 gravity{0.0, -kStandardGravity};
  double restitution = 0.2;
  double friction = 0.0;
  double dt = 1.0 / 60.0;
  /// Approach speeds at or below this get no restitution bias (m/s).
  double restitution_threshold = 1.0;
  /// Push overlapping bodies apart after integration. Off by default so the
  /// contact LCP is the only thing acting on the bodies.
  bool position_projection = false;

  Index dofs() const noexcept { return kDofPerBody * bodies.size(); }
  Index dynamic_count() const;
  void validate() const;
  Vector velocity() const;
  void set_velocity(const Vector& v);
  BlockDiagInverseMass inv_mass() const;
};

/// Sorted by key. Throws GeometryError for coincident circle centres.
std::vector<Contact> detect_contacts(const Scene& scene);

using WarmStartCache = std::map<RowKey, double>;

struct AssembledLcp {
  ContactLcp problem;
  std::optional<Bounds> bounds;  // present only when tangent rows exist
  std::vector<RowKey> keys;      // one per row
};

/// Normal row per contact, plus a tangent row per contact when friction is
/// on and the friction box [-mu lambda_n, mu lambda_n] has nonzero width,
/// lambda_n taken from `warm`.
AssembledLcp assemble(const Scene& scene, const std::vector<Contact>& contacts,
                      bool with_friction, const WarmStartCache& warm = {});

/// Cached impulse per key (0 when absent), projected into the row bounds.
Vector warm_start_map(const WarmStartCache& prev, const std::vector<RowKey>& keys,
                      const std::optional<Bounds>& bounds = std::nullopt);

enum class SolverKind { Pgs, AmgsDense, Amgs, AmgsBoxed };

SolverKind parse_solver(const std::string& name);
std::string solver_name(SolverKind kind);

struct StepOptions {
  SolverKind solver = SolverKind::Pgs;
  SolverConfig config;
  bool frictionless = false;
};

struct StepResult {
  Index rows = 0;
  Index iterations = 0;
  double residual = 0.0;
  double wall_ms = 0.0;  // solver only
  std::vector<double> history;
};

/// Problem of one step after the gravity kick, with its warm start.
struct PreparedStep {
  AssembledLcp lcp;
  Vector lambda0;
};

/// Applies gravity to `scene` and assembles the step's contact LCP.
PreparedStep prepare_step(Scene& scene, const WarmStartCache& warm, bool frictionless);

/// Solves a prepared problem with the selected solver.
Solution solve_prepared(const PreparedStep& step, SolverKind solver,
                        const SolverConfig& cfg);

/// Residual of lambda on the assembled problem (boxed when bounds exist).
double assembled_residual(const AssembledLcp& lcp, const Vector& lambda);

/// Applies the impulses, integrates positions and refreshes the cache.
void finish_step(Scene& scene, WarmStartCache& warm, const AssembledLcp& lcp,
                 const Vector& lambda);

/// gravity -> contacts -> assemble -> warm start -> solve -> apply -> integrate.
StepResult step(Scene& scene, const StepOptions& options, WarmStartCache& warm);

Vec2 total_linear_momentum(const Scene& scene);

/// `body_id,x,y,angle,vx,vy,omega`
std::string snapshot_csv(const Scene& scene);

}  // namespace amgs::rb
