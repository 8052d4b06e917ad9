#pragma once

// Lawson-Hanson nonnegative least squares and least-distance programming.
// Internal to the geometry module.

#include "gvc/geometry.hpp"

namespace gvc::detail {

struct NnlsResult {
  Vector solution;
  Vector residual;  // E x - f
  int iterations = 0;
};

/// min ||E x - f|| s.t. x >= 0
NnlsResult nnls(const Matrix& E, const Vector& f, int max_iterations = 0);

/// min ||w|| s.t. G w >= h. Returns nullopt when the constraints are
/// inconsistent.
std::optional<Vector> least_distance(const Matrix& G, const Vector& h);

}  // namespace gvc::detail
