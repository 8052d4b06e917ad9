#include "gvc/benchmark.hpp"

#include "gvc/sim.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <random>

namespace gvc {

void BenchmarkSpec::validate() const {
  if (counts.empty()) throw InvalidArgument("benchmark: no obstacle counts");
  for (int c : counts)
    if (c < 1) throw InvalidArgument("benchmark: obstacle counts must be >= 1");
  if (instances < 1) throw InvalidArgument("benchmark: instances must be >= 1");
  if (dimension < 1) throw InvalidArgument("benchmark: dimension must be >= 1");
  if (!(min_semi_axis_m > 0.0) || !(max_semi_axis_m >= min_semi_axis_m))
    throw InvalidArgument("benchmark: bad semi-axis range");
  if (!(exclusion_radius_m > max_semi_axis_m))
    throw InvalidArgument("benchmark: exclusion radius must exceed the largest semi-axis");
  if (!(box_m > 2.0 * exclusion_radius_m)) throw InvalidArgument("benchmark: box too small for the exclusion ball");
  if (!(u_max_m > 0.0)) throw InvalidArgument("benchmark: u_max must be positive");
}

BenchmarkInstance make_instance(const BenchmarkSpec& spec, int count, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(count), static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const Eigen::Index n = spec.dimension;
  const double half = 0.5 * spec.box_m;
  std::uniform_real_distribution<double> coord(-half, half);
  std::uniform_real_distribution<double> axis(spec.min_semi_axis_m, spec.max_semi_axis_m);
  std::normal_distribution<double> normal(0.0, 1.0);

  BenchmarkInstance inst;
  inst.current = Vector::Zero(n);
  inst.goal.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) inst.goal(i) = coord(rng);
  inst.ellipsoids.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector c(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) c(i) = coord(rng);
    } while (c.norm() <= spec.exclusion_radius_m);
    // Haar-random rotation: QR of a Gaussian matrix with sign-fixed R.
    Matrix G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ();
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
      if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = std::pow(axis(rng), 2);
    inst.ellipsoids.emplace_back(c, Q * d.asDiagonal() * Q.transpose());
  }
  return inst;
}

std::vector<BenchmarkRow> run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::vector<BenchmarkRow> rows;
  for (int count : spec.counts) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(spec.instances));
    BenchmarkRow row;
    row.count = count;
    row.instances = spec.instances;
    for (int i = 0; i < spec.instances; ++i) {
      const BenchmarkInstance inst = make_instance(spec, count, i);
      std::vector<ObstacleRegion> regions;
      regions.reserve(inst.ellipsoids.size());
      for (const auto& e : inst.ellipsoids) regions.emplace_back(SetAtom(e));

      const auto t0 = std::chrono::steady_clock::now();
      const ProjectionProblem p = build_problem(CellSpec(inst.current, std::move(regions)), inst.goal, spec.u_max_m);
      const ProjectionResult r = solve_projection(p);
      const auto t1 = std::chrono::steady_clock::now();

      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      if (!succeeded(r)) ++row.failures;
    }
    const TimingStats s = summarize(std::move(times));
    row.min_ms = s.min;
    row.median_ms = s.median;
    row.mean_ms = s.mean;
    row.max_ms = s.max;
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(const std::vector<BenchmarkRow>& rows) {
  if (rows.size() < 2) return 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    const double x = std::log(static_cast<double>(r.count));
    const double y = std::log(r.median_ms);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(rows.size());
  const double den = m * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (m * sxy - sx * sy) / den;
}

}  // namespace gvc
