#include "gvc/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace gvc {

namespace {

bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

Vector sample_uniform_in(const Ellipsoid& e, std::mt19937_64& rng) {
  const Eigen::Index n = e.dimension();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector v(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double radius = std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  v *= radius / norm;
  return e.center() + e.basis() * (e.eigenvalues().cwiseSqrt().asDiagonal() * v);
}

}  // namespace

bool operator==(const AgentSpec& a, const AgentSpec& b) {
  return same_vector(a.start, b.start) && same_vector(a.goal, b.goal) && a.u_max_mps == b.u_max_mps &&
         same_vector(a.margin_semi_axes, b.margin_semi_axes);
}

bool operator==(const Scenario& a, const Scenario& b) {
  return a.dimension == b.dimension && a.seed == b.seed && a.max_steps == b.max_steps &&
         a.tick_rate_hz == b.tick_rate_hz && a.collision_threshold_m == b.collision_threshold_m &&
         a.epsilon_m == b.epsilon_m && same_vector(a.noise_semi_axes, b.noise_semi_axes) && a.agents == b.agents &&
         a.sensing_radius_m == b.sensing_radius_m && a.stall_limit_steps == b.stall_limit_steps;
}

void Scenario::validate() const {
  auto bad = [](const std::string& msg) { throw InvalidArgument("scenario: " + msg); };
  if (dimension != 2 && dimension != 3) bad("dimension must be 2 or 3");
  if (max_steps < 0) bad("max_steps must be nonnegative");
  if (!(tick_rate_hz > 0.0)) bad("tick_rate_hz must be positive");
  if (!(collision_threshold_m >= 0.0)) bad("collision_threshold_m must be nonnegative");
  if (!(epsilon_m >= 0.0)) bad("epsilon_m must be nonnegative");
  if (noise_semi_axes.size() != dimension) bad("noise_semi_axes has the wrong dimension");
  if ((noise_semi_axes.array() < 0.0).any()) bad("noise_semi_axes must be nonnegative");
  if (sensing_radius_m && !(*sensing_radius_m > 0.0)) bad("sensing_radius_m must be positive");
  if (stall_limit_steps < 1) bad("stall_limit_steps must be at least 1");
  if (agents.empty()) bad("no agents");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string tag = "agent " + std::to_string(i) + ": ";
    if (a.start.size() != dimension || a.goal.size() != dimension || a.margin_semi_axes.size() != dimension)
      bad(tag + "vector of the wrong dimension");
    if (!a.start.allFinite() || !a.goal.allFinite()) bad(tag + "non-finite coordinates");
    if (!(a.u_max_mps > 0.0) || !std::isfinite(a.u_max_mps)) bad(tag + "u_max_mps must be positive");
    if ((a.margin_semi_axes.array() < 0.0).any()) bad(tag + "negative margin semi-axis");
  }
  // Starting positions must be collision free in the positive-distance sense.
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = i + 1; j < agents.size(); ++j)
      if ((agents[i].start - agents[j].start).norm() <= 0.0)
        bad("agents " + std::to_string(i) + " and " + std::to_string(j) + " start at the same position");
}

std::string_view to_string(AgentStatus s) {
  switch (s) {
    case AgentStatus::moving:
      return "moving";
    case AgentStatus::at_goal:
      return "at-goal";
    case AgentStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

Ellipsoid neighbor_atom(const AgentState& a, int id, const Ellipsoid& estimate, std::span<const double> motion_bounds) {
  Ellipsoid atom = apply_margin(estimate, a.bank.margin);
  const double reach = motion_bounds[static_cast<std::size_t>(id)];
  // Faster neighbors are covered by inflating with their whole reach.
  if (reach > a.u_max) atom = inflate_for_dynamics(atom, reach);
  return atom;
}

StepOutcome step_agent(const AgentState& agent, std::span<const Measurement> observations, const StepContext& ctx) {
  AgentState next = agent;
  update_bank(next.bank, observations,
              [&](int id) { return ctx.motion_bounds[static_cast<std::size_t>(id)]; });

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ObstacleRegion> regions;
  regions.reserve(next.bank.estimates.size());
  for (const auto& [id, est] : next.bank.estimates)
    regions.emplace_back(SetAtom(neighbor_atom(next, id, est, ctx.motion_bounds)));
  ProjectionProblem problem =
      build_problem(CellSpec(next.position, std::move(regions)), next.goal, next.u_max, ctx.epsilon);
  problem.initial_multipliers = agent.last_multipliers;
  ProjectionResult result = solve_projection(problem, ctx.projection);
  const auto t1 = std::chrono::steady_clock::now();

  if (const auto* pt = std::get_if<ProjectedPoint>(&result)) {
    next.position = pt->point;
    next.failure_streak = 0;
    next.last_multipliers = pt->multipliers;
  } else {
    ++next.failure_streak;
  }

  if ((next.position - next.goal).norm() <= kGoalTolerance)
    next.status = AgentStatus::at_goal;
  else if (next.failure_streak >= ctx.stall_limit)
    next.status = AgentStatus::stalled;
  else
    next.status = AgentStatus::moving;

  return StepOutcome{std::move(next), std::move(problem), std::move(result),
                     std::chrono::duration<double, std::micro>(t1 - t0).count()};
}

TimingStats summarize(std::vector<double> samples) {
  TimingStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.min = samples.front();
  s.max = samples.back();
  s.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(n);
  return s;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GVC_NUM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return omp_get_max_threads();
}

RunResult run(const Scenario& s, const RunOptions& options) {
  s.validate();
  const std::size_t N = s.agents.size();
  const auto n = static_cast<Eigen::Index>(s.dimension);

  std::vector<double> bounds(N);
  for (std::size_t i = 0; i < N; ++i) bounds[i] = s.step_bound(i);

  std::vector<AgentState> states;
  states.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& a = s.agents[i];
    AgentState st{.id = static_cast<int>(i),
                  .position = a.start,
                  .goal = a.goal,
                  .u_max = bounds[i],
                  .bank = EstimateBank(static_cast<int>(i),
                                       Ellipsoid::from_semi_axes(Vector::Zero(n), a.margin_semi_axes)),
                  .status = AgentStatus::moving,
                  .failure_streak = 0,
                  .last_multipliers = {}};
    if ((st.position - st.goal).norm() <= kGoalTolerance) st.status = AgentStatus::at_goal;
    states.push_back(std::move(st));
  }

  const Ellipsoid noise = Ellipsoid::from_semi_axes(Vector::Zero(n), s.noise_semi_axes);
  std::mt19937_64 rng(s.seed);

  StepContext ctx;
  ctx.epsilon = s.epsilon_m;
  ctx.stall_limit = s.stall_limit_steps;
  ctx.motion_bounds = bounds;
  ctx.projection = options.projection;

  RunResult out;
  Metrics& m = out.metrics;
  m.completion_steps.assign(N, std::nullopt);
  std::vector<double> solve_times;
  double min_pair = std::numeric_limits<double>::infinity();
  auto pairwise_min = [&](std::size_t i) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) d = std::min(d, (states[i].position - states[j].position).norm());
    return d;
  };
  for (std::size_t i = 0; i < N; ++i) min_pair = std::min(min_pair, pairwise_min(i));

  const int threads = resolve_thread_count(options.threads);
  const bool parallel = options.execution == Execution::parallel && threads > 1;

  std::vector<std::vector<Measurement>> observations(N);
  std::vector<std::optional<StepOutcome>> outcomes(N);
  std::vector<std::exception_ptr> errors(N);

  for (int step = 1; step <= s.max_steps; ++step) {
    for (std::size_t i = 0; i < N; ++i) {
      observations[i].clear();
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        if (s.sensing_radius_m && (states[i].position - states[j].position).norm() > *s.sensing_radius_m) continue;
        observations[i].push_back(
            Measurement{static_cast<int>(j), states[j].position + sample_uniform_in(noise, rng), noise});
      }
    }

    const auto count = static_cast<long>(N);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (parallel)
    for (long k = 0; k < count; ++k) {
      const auto i = static_cast<std::size_t>(k);
      try {
        outcomes[i].emplace(step_agent(states[i], observations[i], ctx));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);

    // Containment of the true (pre-move) positions in every estimate.
    for (std::size_t i = 0; i < N; ++i)
      for (const auto& [j, est] : outcomes[i]->next.bank.estimates)
        if (est.quadratic_form(states[static_cast<std::size_t>(j)].position) > 1.0 + 1e-9) ++m.containment_violations;

    if (options.audit)
      for (std::size_t i = 0; i < N; ++i)
        options.audit(ProjectionAudit{step, static_cast<int>(i), outcomes[i]->problem, outcomes[i]->result});

    const std::size_t first_record = out.traces.size();
    for (std::size_t i = 0; i < N; ++i) {
      StepOutcome& o = *outcomes[i];
      const double moved = (o.next.position - states[i].position).norm();
      m.max_step_excess_m = std::max(m.max_step_excess_m, moved - bounds[i]);
      solve_times.push_back(o.solve_time_us);

      TraceRecord rec;
      rec.step = step;
      rec.agent_id = static_cast<int>(i);
      if (const auto* f = std::get_if<ProjectionFailure>(&o.result)) {
        rec.failure = f->reason;
        ++m.failures_total;
        switch (f->reason) {
          case FailureReason::current_position_unsafe:
            ++m.failures_current_unsafe;
            break;
          case FailureReason::infeasible:
            ++m.failures_infeasible;
            break;
          case FailureReason::numeric_failure:
            ++m.failures_numeric;
            break;
        }
      }
      rec.solve_time_us = o.solve_time_us;
      states[i] = std::move(o.next);
      rec.status = states[i].status;
      out.traces.push_back(std::move(rec));
    }

    bool all_at_goal = true;
    for (std::size_t i = 0; i < N; ++i) {
      TraceRecord& rec = out.traces[first_record + i];
      rec.position = states[i].position;
      rec.min_neighbor_distance_m = pairwise_min(i);
      min_pair = std::min(min_pair, rec.min_neighbor_distance_m);
      if (states[i].status == AgentStatus::at_goal) {
        if (!m.completion_steps[i]) m.completion_steps[i] = step;
      } else {
        m.completion_steps[i].reset();
        all_at_goal = false;
      }
    }
    for (auto& o : outcomes) o.reset();
    m.steps_executed = step;
    if (all_at_goal) break;
  }

  if (N > 1) m.min_pairwise_distance_m = min_pair;
  for (const auto& st : states)
    if (st.status == AgentStatus::stalled) ++m.stalled_agents;
  m.solve_time_us = summarize(std::move(solve_times));
  return out;
}

std::vector<Collision> check_collisions(std::span<const TraceRecord> traces, double threshold) {
  std::vector<Collision> out;
  std::size_t begin = 0;
  while (begin < traces.size()) {
    std::size_t end = begin;
    while (end < traces.size() && traces[end].step == traces[begin].step) ++end;
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t b = a + 1; b < end; ++b) {
        const double d = (traces[a].position - traces[b].position).norm();
        if (d < threshold) {
          const int i = std::min(traces[a].agent_id, traces[b].agent_id);
          const int j = std::max(traces[a].agent_id, traces[b].agent_id);
          out.push_back(Collision{traces[a].step, i, j, d});
        }
      }
    }
    begin = end;
  }
  return out;
}

Scenario antipodal_circle_2d(int agents, double radius_m, std::uint64_t seed, double epsilon_m, double jitter_rad) {
  if (agents < 1) throw InvalidArgument("antipodal_circle_2d: need at least one agent");
  Scenario s;
  s.dimension = 2;
  s.seed = seed;
  s.max_steps = 600;
  s.tick_rate_hz = 60.0;
  s.collision_threshold_m = 0.4;
  s.epsilon_m = epsilon_m;
  s.noise_semi_axes = Vector::Constant(2, 0.1);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-jitter_rad, jitter_rad);
  for (int k = 0; k < agents; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / agents + jitter(rng);
    AgentSpec a;
    a.start = Vector(2);
    a.start << radius_m * std::cos(angle), radius_m * std::sin(angle);
    a.goal = -a.start;
    a.u_max_mps = 3.0;
    // Keep-out radius is the sum of two 0.2 m agent radii.
    a.margin_semi_axes = Vector::Constant(2, 0.4);
    s.agents.push_back(std::move(a));
  }
  return s;
}

Scenario cube_3d(std::uint64_t seed) {
  Scenario s;
  s.dimension = 3;
  s.seed = seed;
  s.max_steps = 1000;
  s.tick_rate_hz = 60.0;
  s.collision_threshold_m = 0.4;
  s.epsilon_m = 0.0;
  s.noise_semi_axes = Vector::Constant(3, 1.0);
  const double starts[10][3] = {
      {-5.0, -2.0, -1.0}, {-5.0, 2.0, 1.0}, {5.0, 2.0, -1.0},  {5.0, -2.0, 1.0}, {-2.0, -5.0, 1.0},
      {2.0, -5.0, -1.0},  {2.0, 5.0, 1.0},  {-2.0, 5.0, -1.0}, {1.0, 1.0, 5.0},  {-1.0, -1.0, -5.0},
  };
  for (const auto& p : starts) {
    AgentSpec a;
    a.start = Vector(3);
    a.start << p[0], p[1], p[2];
    // Fly to the opposite face: mirror the face-normal coordinate only.
    Eigen::Index axis = 0;
    a.start.cwiseAbs().maxCoeff(&axis);
    a.goal = a.start;
    a.goal(axis) = -a.start(axis);
    a.u_max_mps = 6.0;
    a.margin_semi_axes = Vector(3);
    a.margin_semi_axes << 0.3, 0.3, 1.2;
    s.agents.push_back(std::move(a));
  }
  return s;
}

}  // namespace gvc
