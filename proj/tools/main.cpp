#include "gvc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace gvc::cli;
  CLI::App app{"Safe multi-agent navigation by projection onto generalized Voronoi cells"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write trace.csv, metrics.json, collisions.txt");
  run->add_option("--scenario", run_args.scenario, "Scenario JSON file")->required();
  run->add_option("--out", run_args.out_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  auto* eps_opt = run->add_option("--epsilon", epsilon, "Override the separation margin epsilon (m)");
  run->add_option("--threads", run_args.threads, "Worker threads (default: GVC_NUM_THREADS or OpenMP default)");
  run->add_flag("--serial", run_args.serial, "Step agents on one thread");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time build+solve against random ellipsoid obstacles");
  bench->add_option("--counts", bench_args.spec.counts, "Obstacle counts")->delimiter(',');
  bench->add_option("--instances", bench_args.spec.instances, "Instances per count");
  bench->add_option("--dimension", bench_args.spec.dimension, "Space dimension");
  bench->add_option("--seed", bench_args.spec.seed, "Instance generator seed");
  bench->add_option("--out", bench_args.out, "CSV output (metadata written next to it as .json)");

  ProjectArgs project_args;
  auto* project = app.add_subcommand("project", "Project a goal onto one safe-reachable set");
  project->add_option("--current", project_args.current, "Current position, e.g. 0,0")->required();
  project->add_option("--goal", project_args.goal, "Goal position")->required();
  project->add_option("--atoms", project_args.atoms, "Obstacle JSON file")->required();
  project->add_option("--u-max", project_args.u_max, "Reach radius (m)")->required();
  project->add_option("--epsilon", project_args.epsilon, "Separation margin (m)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParseError;
  }

  if (*seed_opt) run_args.seed = seed;
  if (*eps_opt) run_args.epsilon = epsilon;

  if (run->parsed()) return cmd_run(run_args, std::cout, std::cerr);
  if (bench->parsed()) return cmd_bench(bench_args, std::cout, std::cerr);
  return cmd_project(project_args, std::cout, std::cerr);
}
