#include "gvc/voronoi.hpp"

#include <sstream>

namespace gvc {

CellSpec::CellSpec(Vector g, std::vector<ObstacleRegion> obs) : generator(std::move(g)), obstacles(std::move(obs)) {
  for (const auto& region : obstacles) {
    if (region.atoms.empty()) throw InvalidArgument("CellSpec: empty obstacle region");
    for (const auto& atom : region.atoms) {
      if (dimension(atom) != generator.size()) {
        std::ostringstream os;
        os << "CellSpec: atom dimension " << dimension(atom) << " does not match generator dimension "
           << generator.size();
        throw InvalidArgument(os.str());
      }
    }
  }
}

std::size_t CellSpec::atom_count() const {
  std::size_t k = 0;
  for (const auto& r : obstacles) k += r.atoms.size();
  return k;
}

DualConstraint::DualConstraint(SetAtom atom) : atom_(std::move(atom)) {
  if (const auto* e = std::get_if<Ellipsoid>(&atom_)) {
    basis_ = e->basis();
    eig_ = e->eigenvalues();
    // a = U^T S^{-1} mu = D^{-1} U^T mu,  c = mu^T S^{-1} mu = sum (U^T mu)_i^2 / D_ii
    const Vector rotated = basis_.transpose() * e->center();
    projected_center_ = rotated.cwiseQuotient(eig_);
    center_form_ = rotated.dot(projected_center_);
  }
}

Eigen::Index DualConstraint::multiplier_count() const {
  if (const auto* p = std::get_if<Polyhedron>(&atom_)) return p->facet_count();
  return 1;
}

const Matrix& DualConstraint::normals() const { return std::get<Polyhedron>(atom_).normals(); }
const Vector& DualConstraint::offsets() const { return std::get<Polyhedron>(atom_).offsets(); }

double dual_value_ellipsoid(const DualConstraint& c, const Vector& x, double lambda) {
  if (!c.is_ellipsoid()) throw InvalidArgument("dual_value_ellipsoid: atom is not an ellipsoid");
  if (x.size() != c.dimension()) throw InvalidArgument("dual_value_ellipsoid: dimension mismatch");
  if (!(lambda >= 0.0)) throw InvalidArgument("dual_value_ellipsoid: negative multiplier");
  const Eigen::ArrayXd r = (c.basis().transpose() * x).array() + lambda * c.projected_center().array();
  const Eigen::ArrayXd d = c.eigenvalues().array();
  return -(d * r.square() / (d + lambda)).sum() + lambda * (c.center_form() - 1.0);
}

double dual_value_polyhedron(const DualConstraint& c, const Vector& x, const Vector& lambda) {
  if (c.is_ellipsoid()) throw InvalidArgument("dual_value_polyhedron: atom is not a polyhedron");
  if (x.size() != c.dimension() || lambda.size() != c.multiplier_count())
    throw InvalidArgument("dual_value_polyhedron: dimension mismatch");
  if ((lambda.array() < 0.0).any()) throw InvalidArgument("dual_value_polyhedron: negative multiplier");
  return -(x - 0.5 * c.normals().transpose() * lambda).squaredNorm() - c.offsets().dot(lambda);
}

double dual_value(const DualConstraint& c, const Vector& x, const Vector& lambda) {
  if (c.is_ellipsoid()) {
    if (lambda.size() != 1) throw InvalidArgument("dual_value: ellipsoid takes one multiplier");
    return dual_value_ellipsoid(c, x, lambda(0));
  }
  return dual_value_polyhedron(c, x, lambda);
}

double weak_duality_gap(const SetAtom& atom, const Vector& x, const Vector& lambda) {
  // ||y||^2 - 2 x^T y = ||y - x||^2 - ||x||^2
  const double d = distance(atom, x);
  const double primal = d * d - x.squaredNorm();
  return primal - dual_value(DualConstraint(atom), x, lambda);
}

bool cell_membership(const CellSpec& cell, const Vector& z, double tolerance) {
  if (z.size() != cell.generator.size()) throw InvalidArgument("cell_membership: dimension mismatch");
  const double r = (z - cell.generator).norm();
  for (const auto& region : cell.obstacles)
    for (const auto& atom : region.atoms)
      if (r > distance(atom, z) + tolerance) return false;
  return true;
}

}  // namespace gvc
