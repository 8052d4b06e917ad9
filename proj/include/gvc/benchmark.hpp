#pragma once

#include "gvc/projection.hpp"

#include <cstdint>
#include <vector>

namespace gvc {

struct BenchmarkSpec {
  std::vector<int> counts{1, 3, 10, 30, 100};
  int instances = 285;
  int dimension = 3;
  std::uint64_t seed = 0;
  double box_m = 10.0;           // centers uniform in [-box/2, box/2]^n
  double exclusion_radius_m = 2.5;
  double min_semi_axis_m = 0.2;
  double max_semi_axis_m = 2.0;
  double u_max_m = 1.0;

  void validate() const;
};

/// One random projection instance. The current position is the origin;
/// the goal is uniform in the box.
struct BenchmarkInstance {
  Vector current;
  Vector goal;
  std::vector<Ellipsoid> ellipsoids;
};

/// Bit-reproducible in (spec.seed, count, index).
BenchmarkInstance make_instance(const BenchmarkSpec& spec, int count, int index);

struct BenchmarkRow {
  int count = 0;
  int instances = 0;
  int failures = 0;  // numeric failures; infeasible cannot occur by construction
  double min_ms = 0.0;
  double median_ms = 0.0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};

/// Times build + solve sequentially for every instance.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec);

/// Least-squares slope of log(median) against log(count).
double loglog_slope(const std::vector<BenchmarkRow>& rows);

}  // namespace gvc
