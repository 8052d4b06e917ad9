#include "gvc/geometry.hpp"

#include "nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gvc {

namespace {

void require_dimension(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    std::ostringstream os;
    os << what << ": dimension mismatch (expected " << expected << ", got " << got << ")";
    throw InvalidArgument(os.str());
  }
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

double eig_floor(double trace) { return std::max(1e-9, 1e-12 * trace); }

// ---------------------------------------------------------------------------
// Ellipsoid

Ellipsoid::Ellipsoid(Vector center, const Matrix& shape) : center_(std::move(center)) {
  const Eigen::Index n = center_.size();
  if (n == 0) throw InvalidArgument("Ellipsoid: empty center");
  if (shape.rows() != n || shape.cols() != n) throw InvalidArgument("Ellipsoid: shape must be n x n");
  if (!all_finite(shape) || !center_.allFinite()) throw InvalidArgument("Ellipsoid: non-finite entries");

  const double scale = std::max(shape.norm(), std::numeric_limits<double>::min());
  if ((shape - shape.transpose()).norm() > 1e-12 * scale)
    throw InvalidArgument("Ellipsoid: shape is not symmetric");

  const Matrix sym = 0.5 * (shape + shape.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw InvalidArgument("Ellipsoid: eigendecomposition failed");

  const double tr = sym.trace();
  const double floor = eig_floor(std::abs(tr));
  Vector d = es.eigenvalues();
  if (d.minCoeff() < -1e-9 * std::max(1.0, std::abs(tr)))
    throw InvalidArgument("Ellipsoid: shape is not positive semidefinite");

  bool clamped = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) < floor) {
      d(i) = floor;
      clamped = true;
    }
  }
  basis_ = es.eigenvectors();
  eigenvalues_ = d;
  shape_ = clamped ? Matrix(basis_ * d.asDiagonal() * basis_.transpose()) : sym;
}

Ellipsoid Ellipsoid::ball(Vector center, double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("Ellipsoid::ball: negative radius");
  const Eigen::Index n = center.size();
  return Ellipsoid(std::move(center), Matrix::Identity(n, n) * radius * radius);
}

Ellipsoid Ellipsoid::from_semi_axes(Vector center, const Vector& semi_axes) {
  require_dimension(center.size(), semi_axes.size(), "Ellipsoid::from_semi_axes");
  if ((semi_axes.array() < 0.0).any()) throw InvalidArgument("Ellipsoid::from_semi_axes: negative semi-axis");
  return Ellipsoid(std::move(center), Matrix(semi_axes.array().square().matrix().asDiagonal()));
}

double Ellipsoid::quadratic_form(const Vector& z) const {
  require_dimension(dimension(), z.size(), "Ellipsoid::quadratic_form");
  const Vector p = basis_.transpose() * (z - center_);
  return (p.array().square() / eigenvalues_.array()).sum();
}

Vector Ellipsoid::shape_inverse_times(const Vector& v) const {
  const Vector p = basis_.transpose() * v;
  return basis_ * (p.array() / eigenvalues_.array()).matrix();
}

Ellipsoid Ellipsoid::translated(const Vector& offset) const {
  require_dimension(dimension(), offset.size(), "Ellipsoid::translated");
  Ellipsoid out = *this;
  out.center_ += offset;
  return out;
}

Ellipsoid Ellipsoid::recentered(Vector center) const {
  require_dimension(dimension(), center.size(), "Ellipsoid::recentered");
  Ellipsoid out = *this;
  out.center_ = std::move(center);
  return out;
}

// ---------------------------------------------------------------------------
// Polyhedron

Polyhedron::Polyhedron(Matrix normals, Vector offsets, std::optional<Vector> interior_witness)
    : normals_(std::move(normals)), offsets_(std::move(offsets)), witness_(std::move(interior_witness)) {
  if (normals_.rows() < 1 || normals_.cols() < 1) throw InvalidArgument("Polyhedron: need at least one facet");
  require_dimension(normals_.rows(), offsets_.size(), "Polyhedron offsets");
  if (!all_finite(normals_) || !offsets_.allFinite()) throw InvalidArgument("Polyhedron: non-finite entries");
  for (Eigen::Index i = 0; i < normals_.rows(); ++i)
    if (normals_.row(i).squaredNorm() == 0.0) throw InvalidArgument("Polyhedron: zero normal row");
  if (witness_) {
    require_dimension(normals_.cols(), witness_->size(), "Polyhedron witness");
    if (!((normals_ * *witness_ - offsets_).array() < 0.0).all())
      throw InvalidArgument("Polyhedron: interior witness is not strictly inside");
  }
}

Polyhedron Polyhedron::halfspace(const Vector& normal, double offset) {
  Matrix A = normal.transpose();
  Vector b(1);
  b(0) = offset;
  // Any halfspace has interior; pick a point a unit step inside.
  Vector witness = normal * ((offset - 1.0) / normal.squaredNorm());
  return Polyhedron(std::move(A), std::move(b), std::move(witness));
}

Polyhedron Polyhedron::box(const Vector& lower, const Vector& upper) {
  require_dimension(lower.size(), upper.size(), "Polyhedron::box");
  const Eigen::Index n = lower.size();
  Matrix A = Matrix::Zero(2 * n, n);
  Vector b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    b(2 * i) = upper(i);
    A(2 * i + 1, i) = -1.0;
    b(2 * i + 1) = -lower(i);
  }
  std::optional<Vector> witness;
  if (((upper - lower).array() > 0.0).all()) witness = Vector(0.5 * (lower + upper));
  return Polyhedron(std::move(A), std::move(b), std::move(witness));
}

double Polyhedron::max_violation(const Vector& z) const {
  require_dimension(dimension(), z.size(), "Polyhedron::max_violation");
  return (normals_ * z - offsets_).maxCoeff();
}

Polyhedron Polyhedron::translated(const Vector& offset) const {
  require_dimension(dimension(), offset.size(), "Polyhedron::translated");
  std::optional<Vector> w;
  if (witness_) w = Vector(*witness_ + offset);
  return Polyhedron(normals_, offsets_ + normals_ * offset, std::move(w));
}

// ---------------------------------------------------------------------------
// Regions

ObstacleRegion::ObstacleRegion(std::vector<SetAtom> a) : atoms(std::move(a)) {
  if (atoms.empty()) throw InvalidArgument("ObstacleRegion: no atoms");
  const Eigen::Index n = dimension(atoms.front());
  for (const auto& atom : atoms) require_dimension(n, dimension(atom), "ObstacleRegion atom");
}

ObstacleRegion::ObstacleRegion(SetAtom atom) : ObstacleRegion(std::vector<SetAtom>{std::move(atom)}) {}

Eigen::Index dimension(const SetAtom& atom) {
  return std::visit([](const auto& a) { return a.dimension(); }, atom);
}

// ---------------------------------------------------------------------------
// Distances

bool ellipsoid_membership(const Ellipsoid& e, const Vector& z) {
  require_dimension(e.dimension(), z.size(), "ellipsoid_membership");
  return e.quadratic_form(z) <= 1.0 + 1e-12;
}

EllipsoidProjection project_onto_ellipsoid(const Ellipsoid& e, const Vector& z, const DistanceOptions& opts) {
  require_dimension(e.dimension(), z.size(), "distance_to_ellipsoid");
  const Vector& d = e.eigenvalues();
  const Vector p = e.basis().transpose() * (z - e.center());

  EllipsoidProjection out;
  if ((p.array().square() / d.array()).sum() <= 1.0) {
    out.point = z;
    return out;
  }

  // In the eigenbasis the closest point is y_i = d_i p_i / (d_i + nu) where
  // nu >= 0 is the root of F(nu) = sum d_i p_i^2 / (d_i + nu)^2 - 1, which
  // is strictly decreasing and convex.
  const Eigen::ArrayXd c = d.array() * p.array().square();
  auto residual = [&](double nu) { return (c / (d.array() + nu).square()).sum() - 1.0; };
  auto slope = [&](double nu) { return -2.0 * (c / (d.array() + nu).cube()).sum(); };

  int it = 0;
  double lo = 0.0;
  double hi = std::max(1e-12, d.minCoeff());
  while (residual(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++it >= opts.max_iterations)
      throw NumericFailure("distance_to_ellipsoid: failed to bracket multiplier", it, residual(hi));
  }

  double nu = lo;
  bool converged = false;
  while (it++ < opts.max_iterations) {
    const double f = residual(nu);
    if (f == 0.0) {
      converged = true;
      break;
    }
    if (f > 0.0)
      lo = nu;
    else
      hi = nu;
    double next = nu - f / slope(nu);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - nu);
    nu = next;
    if (step <= opts.multiplier_tolerance * std::max(1.0, nu) ||
        hi - lo <= opts.multiplier_tolerance * std::max(1.0, hi)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericFailure("distance_to_ellipsoid: multiplier did not converge", it, residual(nu));

  const Eigen::ArrayXd scale = d.array() + nu;
  const Vector y = (d.array() * p.array() / scale).matrix();
  out.point = e.center() + e.basis() * y;
  out.distance = (nu * p.array() / scale).matrix().norm();
  out.multiplier = nu;
  out.iterations = it;
  return out;
}

double distance_to_ellipsoid(const Ellipsoid& e, const Vector& z, const DistanceOptions& opts) {
  return project_onto_ellipsoid(e, z, opts).distance;
}

Vector project_onto_polyhedron(const Polyhedron& p, const Vector& z) {
  require_dimension(p.dimension(), z.size(), "distance_to_polyhedron");
  const Vector h = p.normals() * z - p.offsets();
  if ((h.array() <= 0.0).all()) return z;
  // y = z + w with min ||w|| s.t. -A w >= A z - b.
  const auto w = detail::least_distance(-p.normals(), h);
  if (!w) throw EmptySetError("distance_to_polyhedron: polyhedron is empty");
  return z + *w;
}

double distance_to_polyhedron(const Polyhedron& p, const Vector& z) {
  return (project_onto_polyhedron(p, z) - z).norm();
}

double distance(const SetAtom& atom, const Vector& z) {
  return std::visit(
      [&](const auto& a) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, Ellipsoid>)
          return distance_to_ellipsoid(a, z);
        else
          return distance_to_polyhedron(a, z);
      },
      atom);
}

bool membership(const SetAtom& atom, const Vector& z) {
  return std::visit(
      [&](const auto& a) -> bool {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, Ellipsoid>)
          return ellipsoid_membership(a, z);
        else
          return a.max_violation(z) <= 1e-12;
      },
      atom);
}

// ---------------------------------------------------------------------------
// Support functions

namespace {

double polyhedron_support(const Polyhedron& p, const Vector& d) {
  // Dual LP: min b^T l s.t. A^T l = d, l >= 0. An optimal basic solution is
  // supported on linearly independent rows, so enumerating row subsets of
  // size <= n is exact. No feasible subset means d is outside the normal
  // cone and the primal is unbounded.
  const Matrix& A = p.normals();
  const Vector& b = p.offsets();
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m > 64) throw InvalidArgument("support_function: too many facets for exact enumeration");

  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<int> subset;
  const double dnorm = std::max(1.0, d.norm());

  auto evaluate = [&]() {
    const auto k = static_cast<Eigen::Index>(subset.size());
    Matrix At(n, k);
    Vector bs(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      At.col(j) = A.row(subset[static_cast<std::size_t>(j)]).transpose();
      bs(j) = b(subset[static_cast<std::size_t>(j)]);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(At);
    if (qr.rank() < k) return;
    const Vector l = qr.solve(d);
    if ((At * l - d).norm() > 1e-10 * dnorm) return;
    if ((l.array() < -1e-13 * dnorm).any()) return;
    const double v = bs.dot(l.cwiseMax(0.0));
    if (v < best) best = v;
    found = true;
  };

  // Iterative enumeration of all subsets of size 1..n in lexicographic order.
  for (int k = 1; k <= std::min(n, m); ++k) {
    subset.assign(static_cast<std::size_t>(k), 0);
    std::iota(subset.begin(), subset.end(), 0);
    while (true) {
      evaluate();
      int i = k - 1;
      while (i >= 0 && subset[static_cast<std::size_t>(i)] == m - k + i) --i;
      if (i < 0) break;
      ++subset[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j)
        subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return found ? best : std::numeric_limits<double>::infinity();
}

}  // namespace

double support_function(const SetAtom& atom, const Vector& direction) {
  require_dimension(dimension(atom), direction.size(), "support_function");
  return std::visit(
      [&](const auto& a) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, Ellipsoid>)
          return a.center().dot(direction) + std::sqrt(std::max(0.0, direction.dot(a.shape() * direction)));
        else
          return polyhedron_support(a, direction);
      },
      atom);
}

Ellipsoid minkowski_bound(const Ellipsoid& e1, const Ellipsoid& e2) {
  require_dimension(e1.dimension(), e2.dimension(), "minkowski_bound");
  const double t1 = e1.trace();
  const double t2 = e2.trace();
  const double beta = std::sqrt(t1 / t2);
  Matrix shape = (1.0 + 1.0 / beta) * e1.shape() + (1.0 + beta) * e2.shape();
  shape = 0.5 * (shape + shape.transpose());
  return Ellipsoid(e1.center() + e2.center(), shape);
}

}  // namespace gvc
