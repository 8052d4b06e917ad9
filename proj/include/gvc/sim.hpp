#pragma once

#include "gvc/estimation.hpp"
#include "gvc/projection.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gvc {

struct AgentSpec {
  Vector start;
  Vector goal;
  double u_max_mps = 1.0;
  Vector margin_semi_axes;
};

bool operator==(const AgentSpec& a, const AgentSpec& b);

struct Scenario {
  int dimension = 2;
  std::uint64_t seed = 0;
  int max_steps = 1000;
  double tick_rate_hz = 60.0;
  double collision_threshold_m = 0.4;
  double epsilon_m = 0.0;
  Vector noise_semi_axes;
  std::vector<AgentSpec> agents;
  std::optional<double> sensing_radius_m;
  int stall_limit_steps = 120;

  /// Per-step displacement bound of agent i (meters per tick).
  double step_bound(std::size_t i) const { return agents[i].u_max_mps / tick_rate_hz; }
  /// Throws InvalidArgument on the first violated invariant.
  void validate() const;
};

bool operator==(const Scenario& a, const Scenario& b);

enum class AgentStatus { moving, at_goal, stalled };
std::string_view to_string(AgentStatus s);

inline constexpr double kGoalTolerance = 1e-3;

struct AgentState {
  int id = -1;
  Vector position;
  Vector goal;
  double u_max = 0.0;  // meters per step
  EstimateBank bank;
  AgentStatus status = AgentStatus::moving;
  int failure_streak = 0;
  std::vector<Vector> last_multipliers;
};

/// Everything an agent needs from the rest of the world for one tick.
struct StepContext {
  double epsilon = 0.0;
  int stall_limit = 120;
  /// Per-step motion bound of every agent, indexed by id.
  std::span<const double> motion_bounds;
  ProjectionOptions projection;
};

struct StepOutcome {
  AgentState next;
  ProjectionProblem problem;
  ProjectionResult result;
  double solve_time_us = 0.0;
};

/// One tick of the hold-on-failure projection loop for a single agent:
/// update estimates, build the cell from margin-inflated estimates, project
/// the goal, move to the projection or hold.
StepOutcome step_agent(const AgentState& agent, std::span<const Measurement> observations, const StepContext& ctx);

/// Atom agent `a` uses for neighbor `id` given its current estimate.
Ellipsoid neighbor_atom(const AgentState& a, int id, const Ellipsoid& estimate, std::span<const double> motion_bounds);

struct TraceRecord {
  int step = 0;  // positions are after `step` ticks (1-based)
  int agent_id = 0;
  Vector position;
  std::optional<FailureReason> failure;  // nullopt: projection returned a point
  AgentStatus status = AgentStatus::moving;
  double solve_time_us = 0.0;
  double min_neighbor_distance_m = 0.0;  // +inf with no neighbors
};

struct TimingStats {
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

TimingStats summarize(std::vector<double> samples);

struct Metrics {
  int steps_executed = 0;
  std::optional<double> min_pairwise_distance_m;
  std::vector<std::optional<int>> completion_steps;
  TimingStats solve_time_us;
  int failures_total = 0;
  int failures_current_unsafe = 0;
  int failures_infeasible = 0;
  int failures_numeric = 0;
  int stalled_agents = 0;
  int containment_violations = 0;
  double max_step_excess_m = 0.0;
};

struct RunResult {
  std::vector<TraceRecord> traces;
  Metrics metrics;
};

enum class Execution { serial, parallel };

struct ProjectionAudit {
  int step;
  int agent_id;
  const ProjectionProblem& problem;
  const ProjectionResult& result;
};

struct RunOptions {
  Execution execution = Execution::parallel;
  /// 0: GVC_NUM_THREADS if set, else the OpenMP default.
  int threads = 0;
  /// Called serially, in agent order, after every tick.
  std::function<void(const ProjectionAudit&)> audit;
  ProjectionOptions projection;
};

int resolve_thread_count(int requested);

RunResult run(const Scenario& scenario, const RunOptions& options = {});

struct Collision {
  int step;
  int agent_a;
  int agent_b;
  double distance_m;
};

/// Every (step, i, j), i < j, with pairwise distance below the threshold.
std::vector<Collision> check_collisions(std::span<const TraceRecord> traces, double threshold);

// Stock scenarios.

/// N agents on a circle swapping to the antipodal point. Start angles get a
/// seed-dependent jitter of up to `jitter_rad`.
Scenario antipodal_circle_2d(int agents, double radius_m, std::uint64_t seed, double epsilon_m = 0.0,
                             double jitter_rad = 0.03);

/// Ten agents on the faces of a 10 m cube flying straight across to the
/// opposite face: 6 m/s at 60 Hz, 1.0 m measurement error, (0.3, 0.3, 1.2) m
/// margins.
Scenario cube_3d(std::uint64_t seed);

}  // namespace gvc
