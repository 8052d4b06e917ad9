#include "nnls.hpp"

#include <cmath>
#include <limits>

namespace gvc::detail {

NnlsResult nnls(const Matrix& E, const Vector& f, int max_iterations) {
  const Eigen::Index m = E.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * m + 30);

  const double tol = 10.0 * std::numeric_limits<double>::epsilon() *
                     std::max<double>(1.0, E.norm()) * static_cast<double>(std::max(E.rows(), m));

  Vector x = Vector::Zero(m);
  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  NnlsResult out;

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < m; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Matrix Ep(E.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ep.col(static_cast<Eigen::Index>(k)) = E.col(idx[k]);
    const Vector zp = Ep.completeOrthogonalDecomposition().solve(f);
    z.setZero(m);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };

  Vector w = E.transpose() * (f - E * x);
  int it = 0;
  while (it < max_iterations) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    Vector z;
    while (it++ < max_iterations) {
      solve_passive(z);
      bool all_positive = true;
      for (Eigen::Index j = 0; j < m; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) all_positive = false;
      if (all_positive) {
        x = z;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
    w = E.transpose() * (f - E * x);
  }

  out.solution = x;
  out.residual = E * x - f;
  out.iterations = it;
  return out;
}

std::optional<Vector> least_distance(const Matrix& G, const Vector& h) {
  const Eigen::Index n = G.cols();
  const Eigen::Index m = G.rows();
  Matrix E(n + 1, m);
  E.topRows(n) = G.transpose();
  E.row(n) = h.transpose();
  Vector f = Vector::Zero(n + 1);
  f(n) = 1.0;

  const NnlsResult r = nnls(E, f);
  const double rn = r.residual(n);
  if (r.residual.norm() <= 1e-12 || std::abs(rn) <= 1e-14) return std::nullopt;
  return Vector(-r.residual.head(n) / rn);
}

}  // namespace gvc::detail
