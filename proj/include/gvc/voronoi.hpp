#pragma once

#include "gvc/geometry.hpp"

#include <vector>

namespace gvc {

/// Generalized Voronoi cell of `generator` against a set of obstacle regions:
/// all z with ||z - generator|| <= dist(z, atom) for every atom.
struct CellSpec {
  Vector generator;
  std::vector<ObstacleRegion> obstacles;

  CellSpec() = default;
  CellSpec(Vector generator, std::vector<ObstacleRegion> obstacles);

  std::size_t atom_count() const;
};

/// One atom of a cell together with the data its Lagrange dual needs.
///
/// For an ellipsoid (mu, S = U D U^T) the dual of
///   inf_y ||y||^2 - 2 x^T y  s.t.  (y - mu)^T S^{-1} (y - mu) <= 1
/// is -(x + l S^{-1} mu)^T (l S^{-1} + I)^{-1} (x + l S^{-1} mu) + l (c - 1),
/// which in the eigenbasis reads
///   g(x, l) = -sum_i (u_i^T x + l a_i)^2 / (1 + l / D_ii) + l (c - 1)
/// with a = U^T S^{-1} mu and c = mu^T S^{-1} mu. For a polyhedron Ay <= b
/// it is g(x, l) = -||x - A^T l / 2||^2 - b^T l.
class DualConstraint {
 public:
  explicit DualConstraint(SetAtom atom);

  const SetAtom& atom() const { return atom_; }
  bool is_ellipsoid() const { return std::holds_alternative<Ellipsoid>(atom_); }
  Eigen::Index dimension() const { return gvc::dimension(atom_); }
  /// 1 for an ellipsoid, the facet count for a polyhedron.
  Eigen::Index multiplier_count() const;

  // Ellipsoid data.
  const Matrix& basis() const { return basis_; }
  const Vector& eigenvalues() const { return eig_; }
  const Vector& projected_center() const { return projected_center_; }
  double center_form() const { return center_form_; }

  // Polyhedron data.
  const Matrix& normals() const;
  const Vector& offsets() const;

 private:
  SetAtom atom_;
  Matrix basis_;
  Vector eig_;
  Vector projected_center_;
  double center_form_ = 0.0;
};

double dual_value_ellipsoid(const DualConstraint& c, const Vector& x, double lambda);
double dual_value_polyhedron(const DualConstraint& c, const Vector& x, const Vector& lambda);
/// Dispatches on the atom kind; an ellipsoid takes a 1-vector.
double dual_value(const DualConstraint& c, const Vector& x, const Vector& lambda);

/// inf_{y in atom} (||y||^2 - 2 x^T y) - g(x, lambda), with the infimum
/// evaluated through the distance oracles. Nonnegative up to round-off.
double weak_duality_gap(const SetAtom& atom, const Vector& x, const Vector& lambda);

bool cell_membership(const CellSpec& cell, const Vector& z, double tolerance = 1e-9);

}  // namespace gvc
