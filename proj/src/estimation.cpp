#include "gvc/estimation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gvc {

namespace {

Matrix precision(const Ellipsoid& e) {
  return e.basis() * e.eigenvalues().cwiseInverse().asDiagonal() * e.basis().transpose();
}

struct FusedMember {
  Vector center;
  Matrix shape;
  double scale = 0.0;  // 1 - delta; negative means empty
  double trace = 0.0;
};

FusedMember fused_member(const Matrix& Q1, const Vector& c1, const Matrix& Q2, const Vector& c2, double rho) {
  const Matrix Q = rho * Q1 + (1.0 - rho) * Q2;
  const Vector q = rho * (Q1 * c1) + (1.0 - rho) * (Q2 * c2);
  Eigen::LLT<Matrix> llt(Q);
  FusedMember f;
  f.center = llt.solve(q);
  const double delta = rho * c1.dot(Q1 * c1) + (1.0 - rho) * c2.dot(Q2 * c2) - q.dot(f.center);
  f.scale = 1.0 - delta;
  const Matrix Qinv = llt.solve(Matrix::Identity(Q.rows(), Q.cols()));
  f.shape = std::max(f.scale, 0.0) * Qinv;
  f.shape = 0.5 * (f.shape + f.shape.transpose());
  f.trace = f.scale < 0.0 ? -1.0 : f.shape.trace();
  return f;
}

// Q1 and Q2 diagonalized together: Q1 = W diag(m) Wᵀ, Q2 = W Wᵀ. Every
// family member's trace and scale then costs O(n).
class FusionFamily {
 public:
  FusionFamily(const Matrix& Q1, const Vector& c1, const Matrix& Q2, const Vector& c2) {
    Eigen::LLT<Matrix> llt(Q2);
    const Matrix L = llt.matrixL();
    const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(L.rows(), L.cols()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Linv * Q1 * Linv.transpose());
    m_ = eig.eigenvalues();
    const Matrix W = L * eig.eigenvectors();
    const Matrix Winv = eig.eigenvectors().transpose() * Linv;
    w_ = Winv.rowwise().squaredNorm();
    a_ = W.transpose() * c1;
    b_ = W.transpose() * c2;
    ca_ = (m_.array() * a_.array().square()).sum();
    cb_ = b_.squaredNorm();
  }

  double scale(double rho) const {
    const Eigen::ArrayXd d = rho * m_.array() + (1.0 - rho);
    const Eigen::ArrayXd z = rho * m_.array() * a_.array() + (1.0 - rho) * b_.array();
    return 1.0 - (rho * ca_ + (1.0 - rho) * cb_ - (z.square() / d).sum());
  }

  double trace(double rho, double scale) const {
    const Eigen::ArrayXd d = rho * m_.array() + (1.0 - rho);
    return scale * (w_.array() / d).sum();
  }

 private:
  Vector m_, w_, a_, b_;
  double ca_ = 0.0, cb_ = 0.0;
};

}  // namespace

Ellipsoid measurement_set(const Measurement& m) {
  if (m.position.size() != m.noise_bound.dimension())
    throw InvalidArgument("measurement_set: dimension mismatch");
  return m.noise_bound.recentered(m.position + m.noise_bound.center());
}

EstimateBank::EstimateBank(int owner_id, Ellipsoid m) : owner(owner_id), margin(std::move(m)) {}

Ellipsoid predict(const Ellipsoid& e, double motion_bound) {
  if (!(motion_bound >= 0.0)) throw InvalidArgument("predict: negative motion bound");
  if (motion_bound == 0.0) return e;
  return minkowski_bound(e, Ellipsoid::ball(Vector::Zero(e.dimension()), motion_bound));
}

double fusion_trace(const Ellipsoid& prior, const Ellipsoid& meas_set, double rho) {
  return fused_member(precision(prior), prior.center(), precision(meas_set), meas_set.center(), rho).trace;
}

Ellipsoid fuse(const Ellipsoid& prior, const Measurement& meas) {
  const Ellipsoid mset = measurement_set(meas);
  if (prior.dimension() != mset.dimension()) throw InvalidArgument("fuse: dimension mismatch");

  const Matrix Q1 = precision(prior);
  const Matrix Q2 = precision(mset);
  const Vector& c1 = prior.center();
  const Vector& c2 = mset.center();

  // Slightly negative scales come from round-off on tangent sets.
  constexpr double empty_tol = -1e-12;
  const FusionFamily family(Q1, c1, Q2, c2);
  auto objective = [&](double rho) {
    const double scale = family.scale(rho);
    if (scale < empty_tol) throw InconsistentMeasurement("fuse: prior and measurement sets do not intersect");
    return family.trace(rho, std::max(scale, 0.0));
  };

  constexpr int grid = 64;
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double v = objective(static_cast<double>(i) / (grid - 1));
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }

  double lo = static_cast<double>(std::max(best - 1, 0)) / (grid - 1);
  double hi = static_cast<double>(std::min(best + 1, grid - 1)) / (grid - 1);
  double best_rho = static_cast<double>(best) / (grid - 1);
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = objective(a);
  double fb = objective(b);
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = objective(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = objective(b);
    }
  }
  const double rho_ref = fa < fb ? a : b;
  if (std::min(fa, fb) < best_v) best_rho = rho_ref;

  // The endpoints are the inputs themselves; return them exactly.
  if (best_rho == 1.0) return prior;
  if (best_rho == 0.0) return mset;
  const FusedMember f = fused_member(Q1, c1, Q2, c2, best_rho);
  return Ellipsoid(f.center, f.shape);
}

Ellipsoid apply_margin(const Ellipsoid& e, const Ellipsoid& margin) {
  if (e.dimension() != margin.dimension()) throw InvalidArgument("apply_margin: dimension mismatch");
  const Ellipsoid centered = margin.recentered(Vector::Zero(margin.dimension()));
  return minkowski_bound(e, centered);
}

}  // namespace gvc
