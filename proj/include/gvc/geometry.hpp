#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gvc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative routine fails to converge. Carries the iteration
/// count and the last residual so callers can log something useful.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class EmptySetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest eigenvalue kept for an ellipsoid shape with the given trace.
double eig_floor(double trace);

/// {y | (y - center)^T shape^{-1} (y - center) <= 1}, shape symmetric
/// positive definite. The eigendecomposition shape = U diag(D) U^T is taken
/// once on construction; eigenvalues below eig_floor(tr shape) are clamped.
class Ellipsoid {
 public:
  Ellipsoid(Vector center, const Matrix& shape);

  static Ellipsoid ball(Vector center, double radius);
  /// Axis-aligned ellipsoid with the given semi-axis lengths.
  static Ellipsoid from_semi_axes(Vector center, const Vector& semi_axes);

  Eigen::Index dimension() const { return center_.size(); }
  const Vector& center() const { return center_; }
  const Matrix& shape() const { return shape_; }
  const Matrix& basis() const { return basis_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  double trace() const { return eigenvalues_.sum(); }

  /// (z - center)^T shape^{-1} (z - center)
  double quadratic_form(const Vector& z) const;
  Vector shape_inverse_times(const Vector& v) const;

  Ellipsoid translated(const Vector& offset) const;
  Ellipsoid recentered(Vector center) const;

 private:
  Vector center_;
  Matrix shape_;
  Matrix basis_;
  Vector eigenvalues_;
};

/// {y | A y <= b}. Emptiness is not checked here.
class Polyhedron {
 public:
  Polyhedron(Matrix normals, Vector offsets, std::optional<Vector> interior_witness = std::nullopt);

  static Polyhedron halfspace(const Vector& normal, double offset);
  static Polyhedron box(const Vector& lower, const Vector& upper);

  Eigen::Index dimension() const { return normals_.cols(); }
  Eigen::Index facet_count() const { return normals_.rows(); }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }
  const std::optional<Vector>& interior_witness() const { return witness_; }
  bool has_interior() const { return witness_.has_value(); }

  /// Largest constraint violation max_i (a_i^T z - b_i); <= 0 inside.
  double max_violation(const Vector& z) const;
  Polyhedron translated(const Vector& offset) const;

 private:
  Matrix normals_;
  Vector offsets_;
  std::optional<Vector> witness_;
};

using SetAtom = std::variant<Ellipsoid, Polyhedron>;

/// Union of atoms: everything one obstacle (or neighbor) could occupy.
struct ObstacleRegion {
  std::vector<SetAtom> atoms;

  ObstacleRegion() = default;
  explicit ObstacleRegion(std::vector<SetAtom> atoms);
  explicit ObstacleRegion(SetAtom atom);
};

Eigen::Index dimension(const SetAtom& atom);

struct DistanceOptions {
  int max_iterations = 200;
  double multiplier_tolerance = 1e-12;
};

/// Closest point of an ellipsoid to a query point. `multiplier` is the
/// active-constraint multiplier (0 when the point is inside).
struct EllipsoidProjection {
  Vector point;
  double distance = 0.0;
  double multiplier = 0.0;
  int iterations = 0;
};

bool ellipsoid_membership(const Ellipsoid& e, const Vector& z);
EllipsoidProjection project_onto_ellipsoid(const Ellipsoid& e, const Vector& z,
                                           const DistanceOptions& opts = {});
double distance_to_ellipsoid(const Ellipsoid& e, const Vector& z, const DistanceOptions& opts = {});

Vector project_onto_polyhedron(const Polyhedron& p, const Vector& z);
double distance_to_polyhedron(const Polyhedron& p, const Vector& z);

double distance(const SetAtom& atom, const Vector& z);
bool membership(const SetAtom& atom, const Vector& z);

/// sup_{y in atom} d^T y. Unbounded polyhedra give +infinity.
double support_function(const SetAtom& atom, const Vector& direction);

/// Minimum-trace member of the family (1+1/b) S1 + (1+b) S2 bounding the
/// Minkowski sum e1 + e2; center is c1 + c2.
Ellipsoid minkowski_bound(const Ellipsoid& e1, const Ellipsoid& e2);

}  // namespace gvc
