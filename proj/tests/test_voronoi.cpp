#include "gvc/voronoi.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gvc;

namespace {

double inf_over_atom(const SetAtom& atom, const Vector& x) {
  // inf_{y in atom} ||y||^2 - 2 x^T y = dist(x, atom)^2 - ||x||^2; lower end of the bracket.
  if (const auto* e = std::get_if<Ellipsoid>(&atom)) {
    const double lo = oracle::ellipsoid_distance(e->center(), e->shape(), x).lo;
    return lo * lo - x.squaredNorm();
  }
  const auto& p = std::get<Polyhedron>(atom);
  const Vector y = oracle::polyhedron_projection(p.normals(), p.offsets(), x);
  return (y - x).squaredNorm() - x.squaredNorm();
}

}  // namespace

TEST_CASE("ellipsoid dual examples") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const DualConstraint c(Ellipsoid(oracle::random_point(rng, n, 3.0), oracle::random_shape(rng, n, 0.1, 2.0)));
    const Vector x = oracle::random_point(rng, n, 5.0);
    CHECK(std::abs(dual_value_ellipsoid(c, x, 0.0) + x.squaredNorm()) <= 1e-12 * std::max(1.0, x.squaredNorm()));
  }
  const DualConstraint unit(Ellipsoid::ball(Vector::Zero(2), 1.0));
  CHECK(dual_value_ellipsoid(unit, Vector::Zero(2), 5.0) == doctest::Approx(-5.0).epsilon(1e-14));
}

TEST_CASE("ellipsoid dual matches the stationarity-system oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lam(0.0, 10.0);
  for (int t = 0; t < 500; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const Vector mu = oracle::random_point(rng, n, 3.0);
    const Matrix S = oracle::random_shape(rng, n, 0.1, 2.0);
    const DualConstraint c(Ellipsoid(mu, S));
    const Vector x = oracle::random_point(rng, n, 5.0);
    const double l = lam(rng);
    const double want = oracle::ellipsoid_lagrangian_inf(mu, S, x, l);
    CHECK(std::abs(dual_value_ellipsoid(c, x, l) - want) <= 1e-8 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("polyhedral dual examples and stationarity oracle") {
  const DualConstraint h(Polyhedron::halfspace(Vector{{1.0, 0.0}}, 0.0));
  CHECK(dual_value_polyhedron(h, Vector{{1.0, 0.0}}, Vector{{2.0}}) == doctest::Approx(0.0));
  CHECK(dual_value_polyhedron(h, Vector{{1.0, 2.0}}, Vector{{0.0}}) == -5.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lam(0.0, 5.0);
  for (int t = 0; t < 500; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const int m = 1 + t % 6;
    Matrix A(m, n);
    for (int i = 0; i < m; ++i) A.row(i) = oracle::random_unit(rng, n).transpose();
    const Vector b = oracle::random_point(rng, m, 2.0);
    const DualConstraint c(Polyhedron(A, b));
    const Vector x = oracle::random_point(rng, n, 5.0);
    Vector l(m);
    for (int i = 0; i < m; ++i) l(i) = lam(rng);
    const double want = oracle::polyhedron_lagrangian_inf(A, b, x, l);
    CHECK(std::abs(dual_value_polyhedron(c, x, l) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    CHECK(dual_value(c, x, Vector::Zero(m)) == -x.squaredNorm());
  }
}

TEST_CASE("dual is concave in lambda along random lines") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lam(0.0, 20.0);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const DualConstraint c(Ellipsoid(oracle::random_point(rng, n, 3.0), oracle::random_shape(rng, n, 0.1, 2.0)));
    const Vector x = oracle::random_point(rng, n, 5.0);
    const double a = lam(rng), b = lam(rng);
    const double mid = dual_value_ellipsoid(c, x, 0.5 * (a + b));
    const double avg = 0.5 * (dual_value_ellipsoid(c, x, a) + dual_value_ellipsoid(c, x, b));
    CHECK(mid >= avg - 1e-9 * std::max(1.0, std::abs(avg)));
  }
}

TEST_CASE("dual is a lower bound on the constrained infimum") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.0, 10.0);
  for (int t = 0; t < 400; ++t) {
    const Eigen::Index n = 2 + t % 2;
    SetAtom atom = Ellipsoid(oracle::random_point(rng, n, 3.0), oracle::random_shape(rng, n, 0.1, 2.0));
    Vector l = Vector::Constant(1, lam(rng));
    if (t % 4 == 3) {
      atom = Polyhedron::box(Vector::Constant(n, -1.0), Vector::Constant(n, 0.5));
      l = Vector(2 * n);
      for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = lam(rng);
    }
    const DualConstraint c(atom);
    const Vector x = oracle::random_point(rng, n, 5.0);
    const double g = dual_value(c, x, l);
    CHECK(g <= inf_over_atom(atom, x) + 1e-7);
    CHECK(weak_duality_gap(atom, x, l) >= -1e-7);
  }
}

TEST_CASE("dual is tight at the maximizing multiplier") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const Ellipsoid e(oracle::random_point(rng, n, 3.0), oracle::random_shape(rng, n, 0.2, 2.0));
    const DualConstraint c(e);
    Vector x = oracle::random_point(rng, n, 6.0);
    if (e.quadratic_form(x) <= 1.0) continue;
    const double lstar = oracle::maximize_concave([&](double l) { return dual_value_ellipsoid(c, x, l); });
    const Vector l = Vector::Constant(1, lstar);
    CAPTURE(t);
    CHECK(weak_duality_gap(e, x, l) <= 1e-6);
    CHECK(inf_over_atom(e, x) - dual_value(c, x, l) <= 1e-6);
    // The optimal multiplier is the projection multiplier of the distance problem.
    const double nu = project_onto_ellipsoid(e, x).multiplier;
    CHECK(std::abs(lstar - nu) <= 1e-5 * std::max(1.0, nu));
  }
}

TEST_CASE("weak duality gap examples") {
  const Ellipsoid unit = Ellipsoid::ball(Vector::Zero(2), 1.0);
  // x = 0: infimum is 0 and g(0, l) = -l.
  CHECK(weak_duality_gap(unit, Vector::Zero(2), Vector::Constant(1, 3.0)) == doctest::Approx(3.0));
  CHECK(weak_duality_gap(unit, Vector::Zero(2), Vector::Constant(1, 0.0)) == doctest::Approx(0.0));
  // l = 0 with the unconstrained minimizer y = x outside the atom.
  CHECK(weak_duality_gap(unit, Vector{{3.0, 0.0}}, Vector::Constant(1, 0.0)) > 0.0);
}

TEST_CASE("cell membership examples") {
  const Vector xc = Vector::Zero(2);
  const CellSpec cell(xc, {ObstacleRegion(SetAtom(Ellipsoid::ball(Vector{{4.0, 0.0}}, 1.0)))});
  CHECK(cell_membership(cell, xc));
  CHECK(cell_membership(cell, Vector{{1.5, 0.0}}));
  CHECK_FALSE(cell_membership(cell, Vector{{1.6, 0.0}}));
  CHECK_FALSE(cell_membership(cell, Vector{{4.0, 0.5}}));
  CHECK_THROWS_AS(CellSpec(xc, {ObstacleRegion(SetAtom(Ellipsoid::ball(Vector::Zero(3), 1.0)))}), InvalidArgument);
}

TEST_CASE("cell members are no farther from the generator than from any atom point") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int members = 0;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::Index n = 2 + t % 2;
    const Ellipsoid e(oracle::random_point(rng, n, 1.0) + Vector::Constant(n, 2.0),
                      oracle::random_shape(rng, n, 0.2, 1.0));
    const Vector xc = Vector::Zero(n);
    const CellSpec cell(xc, {ObstacleRegion(SetAtom(e))});
    const Vector z = oracle::random_point(rng, n, 3.0);
    // y uniform-ish inside the atom: center + L * (direction * radius).
    const Matrix L = e.shape().llt().matrixL();
    const Vector y = e.center() + L * (oracle::random_unit(rng, n) * std::pow(u(rng), 1.0 / static_cast<double>(n)));
    if (cell_membership(cell, z)) {
      ++members;
      CHECK((z - xc).norm() <= (z - y).norm() + 1e-9);
    }
  }
  CHECK(members > 1000);
}
