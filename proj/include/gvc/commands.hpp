#pragma once

#include "gvc/benchmark.hpp"
#include "gvc/sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace gvc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kParseError = 2, kIoError = 3 };

struct RunArgs {
  std::filesystem::path scenario;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  int threads = 0;
  bool serial = false;
};

/// Writes trace.csv, metrics.json and collisions.txt into out_dir.
/// Exit 0 iff the collision report is empty.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

struct BenchArgs {
  BenchmarkSpec spec;
  std::filesystem::path out;  // CSV; metadata goes to the same stem with .json
};

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err);

struct ProjectArgs {
  std::string current;
  std::string goal;
  std::filesystem::path atoms;
  double u_max = 1.0;
  double epsilon = 0.0;
};

/// Prints the projected point or "FAIL <reason>"; exit 0 on a point, 1 on
/// failure.
int cmd_project(const ProjectArgs& args, std::ostream& out, std::ostream& err);

// Output formats, exposed for tests.
std::string format_trace_csv(const RunResult& r, int dimension);
std::string format_metrics_json(const Scenario& s, const RunResult& r, std::size_t collisions);
std::string format_collisions(const std::vector<Collision>& c);
std::string format_bench_csv(const std::vector<BenchmarkRow>& rows);
std::string format_bench_metadata(const BenchmarkSpec& spec, const std::vector<BenchmarkRow>& rows);

}  // namespace gvc::cli
