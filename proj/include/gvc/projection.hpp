#pragma once

#include "gvc/geometry.hpp"
#include "gvc/voronoi.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gvc {

/// normal^T x <= offset
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// Projection of a goal point onto the safe-reachable set
///   { x in cell } with ||x - current|| <= u_max and every extra halfspace.
/// `constraints` are expressed in coordinates translated so that `current`
/// sits at the origin; `atoms` keeps the original-frame atoms for
/// independent verification.
struct ProjectionProblem {
  Vector current;
  Vector goal;
  double u_max = 0.0;
  double epsilon = 0.0;
  std::vector<SetAtom> atoms;
  std::vector<DualConstraint> constraints;
  std::vector<Halfspace> extra;
  /// Warm start; ignored unless it has one entry of the right size per
  /// constraint.
  std::vector<Vector> initial_multipliers;

  Eigen::Index dimension() const { return current.size(); }
  /// Primal dimension plus one multiplier per ellipsoid / facet.
  Eigen::Index variable_count() const;
};

struct ProjectionOptions {
  double gap_tolerance = 1e-13;
  double residual_tolerance = 1e-10;
  int max_iterations = 150;
  /// Slack used when checking the returned point against the distance oracles.
  double verify_tolerance = 1e-6;
  /// Atoms closer than this to the current position make the cell degenerate.
  double unsafe_distance = 1e-9;
  int theta_grid = 16;
};

enum class FailureReason { current_position_unsafe, infeasible, numeric_failure };

std::string_view to_string(FailureReason r);

struct SolverStats {
  int iterations = 0;
  int phase1_iterations = 0;
  double surrogate_gap = 0.0;
  double kkt_residual = 0.0;
  double theta = 1.0;
  bool goal_feasible = false;
};

struct ProjectedPoint {
  Vector point;
  /// Unshrunk projection (equals `point` when epsilon == 0).
  Vector unshrunk;
  std::vector<Vector> multipliers;
  SolverStats stats;
};

struct ProjectionFailure {
  FailureReason reason;
  std::string detail;
};

using ProjectionResult = std::variant<ProjectedPoint, ProjectionFailure>;

inline bool succeeded(const ProjectionResult& r) { return std::holds_alternative<ProjectedPoint>(r); }

ProjectionProblem build_problem(const CellSpec& cell, const Vector& goal, double u_max, double epsilon = 0.0,
                                std::vector<Halfspace> extra = {});

ProjectionResult solve_projection(const ProjectionProblem& problem, const ProjectionOptions& options = {});

/// min over atoms of [dist(atom, z) - ||z - current||]; +inf with no atoms.
double separation_margin(const ProjectionProblem& problem, const Vector& z);

/// Checks a candidate point against the original (non-dual) constraints.
bool verify_safe_point(const ProjectionProblem& problem, const Vector& z, double tolerance);

/// Bound on atom + ball(0, reach_radius), center unchanged.
Ellipsoid inflate_for_dynamics(const Ellipsoid& atom, double reach_radius);

}  // namespace gvc
