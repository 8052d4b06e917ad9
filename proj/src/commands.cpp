#include "gvc/commands.hpp"

#include "gvc/scenario_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace gvc::cli {

namespace {

using nlohmann::json;

// 9 significant digits; non-finite values spelled out.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string trace_status(const TraceRecord& t) {
  std::string s(to_string(t.status));
  if (t.failure) s += "/" + std::string(to_string(*t.failure));
  return s;
}

}  // namespace

std::string format_trace_csv(const RunResult& r, int dimension) {
  std::ostringstream os;
  os << "step,agent_id";
  for (int i = 0; i < dimension; ++i) os << ",x" << i;
  os << ",status,solve_time_us,min_neighbor_dist_m\n";
  for (const auto& t : r.traces) {
    os << t.step << ',' << t.agent_id;
    for (Eigen::Index i = 0; i < t.position.size(); ++i) os << ',' << num(t.position(i));
    os << ',' << trace_status(t) << ',' << num(t.solve_time_us) << ',' << num(t.min_neighbor_distance_m) << '\n';
  }
  return os.str();
}

std::string format_metrics_json(const Scenario& s, const RunResult& r, std::size_t collisions) {
  const Metrics& m = r.metrics;
  json j;
  j["agents"] = s.agents.size();
  j["seed"] = s.seed;
  j["epsilon_m"] = s.epsilon_m;
  j["collision_threshold_m"] = s.collision_threshold_m;
  j["steps_executed"] = m.steps_executed;
  j["min_pairwise_distance_m"] = m.min_pairwise_distance_m ? nullable(*m.min_pairwise_distance_m) : json(nullptr);
  json done = json::array();
  for (const auto& c : m.completion_steps) done.push_back(c ? json(*c) : json(nullptr));
  j["completion_steps"] = std::move(done);
  j["solve_time_us"] = {{"min", m.solve_time_us.min},
                        {"median", m.solve_time_us.median},
                        {"mean", m.solve_time_us.mean},
                        {"max", m.solve_time_us.max}};
  j["projection_failures"] = {{"total", m.failures_total},
                              {"current_position_unsafe", m.failures_current_unsafe},
                              {"infeasible", m.failures_infeasible},
                              {"numeric_failure", m.failures_numeric}};
  j["stalled_agents"] = m.stalled_agents;
  j["containment_violations"] = m.containment_violations;
  j["max_step_excess_m"] = m.max_step_excess_m;
  j["collisions"] = collisions;
  return j.dump(2) + "\n";
}

std::string format_collisions(const std::vector<Collision>& c) {
  std::ostringstream os;
  for (const auto& x : c)
    os << "step " << x.step << " agents " << x.agent_a << ' ' << x.agent_b << " distance_m " << num(x.distance_m)
       << '\n';
  return os.str();
}

std::string format_bench_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream os;
  os << "count,instances,failures,min_ms,median_ms,mean_ms,max_ms\n";
  for (const auto& r : rows)
    os << r.count << ',' << r.instances << ',' << r.failures << ',' << num(r.min_ms) << ',' << num(r.median_ms)
       << ',' << num(r.mean_ms) << ',' << num(r.max_ms) << '\n';
  return os.str();
}

std::string format_bench_metadata(const BenchmarkSpec& spec, const std::vector<BenchmarkRow>& rows) {
  json j;
  j["dimension"] = spec.dimension;
  j["seed"] = spec.seed;
  j["instances_per_count"] = spec.instances;
  j["counts"] = spec.counts;
  j["timed"] = "build + solve, sequential, steady_clock";
  j["distribution"] = {
      {"current_position", "origin"},
      {"goal", "uniform in box"},
      {"box_m", spec.box_m},
      {"centers", "uniform in box, rejected inside exclusion ball around the current position"},
      {"exclusion_radius_m", spec.exclusion_radius_m},
      {"rotation", "Haar-random (QR of Gaussian matrix)"},
      {"semi_axes_m", {spec.min_semi_axis_m, spec.max_semi_axis_m}},
      {"semi_axis_distribution", "uniform"},
      {"u_max_m", spec.u_max_m},
  };
  json table = json::array();
  for (const auto& r : rows)
    table.push_back({{"count", r.count},
                     {"failures", r.failures},
                     {"min_ms", r.min_ms},
                     {"median_ms", r.median_ms},
                     {"mean_ms", r.mean_ms},
                     {"max_ms", r.max_ms}});
  j["rows"] = std::move(table);
  j["loglog_slope_median"] = loglog_slope(rows);
  return j.dump(2) + "\n";
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(args.scenario);
    if (args.seed) s.seed = *args.seed;
    if (args.epsilon) s.epsilon_m = *args.epsilon;
    s.validate();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  } catch (const InvalidArgument& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  }

  RunOptions opts;
  opts.execution = args.serial ? Execution::serial : Execution::parallel;
  opts.threads = args.threads;
  const RunResult r = run(s, opts);
  const auto collisions = check_collisions(r.traces, s.collision_threshold_m);

  try {
    std::error_code ec;
    std::filesystem::create_directories(args.out_dir, ec);
    if (ec) throw IoError("cannot create " + args.out_dir.string() + ": " + ec.message());
    write_text_file(args.out_dir / "trace.csv", format_trace_csv(r, s.dimension));
    write_text_file(args.out_dir / "metrics.json", format_metrics_json(s, r, collisions.size()));
    write_text_file(args.out_dir / "collisions.txt", format_collisions(collisions));
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }

  out << "steps " << r.metrics.steps_executed << ", agents " << s.agents.size() << ", min pairwise distance "
      << (r.metrics.min_pairwise_distance_m ? num(*r.metrics.min_pairwise_distance_m) : std::string("n/a"))
      << " m, collisions " << collisions.size() << '\n';
  return collisions.empty() ? kOk : kFailure;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<BenchmarkRow> rows;
  try {
    rows = run_benchmark(args.spec);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kParseError;
  }
  const std::string csv = format_bench_csv(rows);
  out << csv;
  out << "log-log slope of median: " << num(loglog_slope(rows)) << '\n';
  if (!args.out.empty()) {
    try {
      if (args.out.has_parent_path()) std::filesystem::create_directories(args.out.parent_path());
      write_text_file(args.out, csv);
      std::filesystem::path meta = args.out;
      meta.replace_extension(".json");
      write_text_file(meta, format_bench_metadata(args.spec, rows));
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kIoError;
    }
  }
  return kOk;
}

int cmd_project(const ProjectArgs& args, std::ostream& out, std::ostream& err) {
  AtomsFile atoms;
  Vector current, goal;
  try {
    current = parse_point(args.current);
    goal = parse_point(args.goal);
    atoms = parse_atoms(read_text_file(args.atoms));
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  }

  ProjectionProblem p;
  try {
    std::vector<ObstacleRegion> regions;
    for (auto& a : atoms.atoms) regions.emplace_back(std::move(a));
    p = build_problem(CellSpec(current, std::move(regions)), goal, args.u_max, args.epsilon, atoms.halfspaces);
  } catch (const InvalidArgument& e) {
    err << "parse error: " << e.what() << '\n';
    return kParseError;
  }

  const ProjectionResult r = solve_projection(p);
  if (const auto* f = std::get_if<ProjectionFailure>(&r)) {
    out << "FAIL " << to_string(f->reason) << '\n';
    err << f->detail << '\n';
    return kFailure;
  }
  const Vector& x = std::get<ProjectedPoint>(r).point;
  char buf[32];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", x(i));
    out << (i ? " " : "") << buf;
  }
  out << '\n';
  return kOk;
}

}  // namespace gvc::cli
