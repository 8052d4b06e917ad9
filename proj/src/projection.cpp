#include "gvc/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gvc {

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::current_position_unsafe:
      return "current-position-unsafe";
    case FailureReason::infeasible:
      return "infeasible";
    case FailureReason::numeric_failure:
      return "numeric-failure";
  }
  return "unknown";
}

Eigen::Index ProjectionProblem::variable_count() const {
  Eigen::Index k = dimension();
  for (const auto& c : constraints) k += c.multiplier_count();
  return k;
}

ProjectionProblem build_problem(const CellSpec& cell, const Vector& goal, double u_max, double epsilon,
                                std::vector<Halfspace> extra) {
  const Eigen::Index n = cell.generator.size();
  if (n == 0) throw InvalidArgument("build_problem: empty generator");
  if (goal.size() != n) throw InvalidArgument("build_problem: goal dimension mismatch");
  if (!(u_max > 0.0) || !std::isfinite(u_max)) throw InvalidArgument("build_problem: u_max must be positive");
  if (!(epsilon >= 0.0)) throw InvalidArgument("build_problem: epsilon must be nonnegative");
  for (const auto& h : extra) {
    if (h.normal.size() != n) throw InvalidArgument("build_problem: halfspace dimension mismatch");
    if (h.normal.squaredNorm() == 0.0) throw InvalidArgument("build_problem: zero halfspace normal");
  }

  ProjectionProblem p;
  p.current = cell.generator;
  p.goal = goal;
  p.u_max = u_max;
  p.epsilon = epsilon;
  p.extra = std::move(extra);
  p.atoms.reserve(cell.atom_count());
  p.constraints.reserve(cell.atom_count());
  const Vector shift = -cell.generator;
  for (const auto& region : cell.obstacles) {
    for (const auto& atom : region.atoms) {
      if (dimension(atom) != n) throw InvalidArgument("build_problem: atom dimension mismatch");
      p.atoms.push_back(atom);
      p.constraints.emplace_back(
          std::visit([&](const auto& a) -> SetAtom { return a.translated(shift); }, atom));
    }
  }
  return p;
}

double separation_margin(const ProjectionProblem& problem, const Vector& z) {
  const double r = (z - problem.current).norm();
  double m = std::numeric_limits<double>::infinity();
  for (const auto& atom : problem.atoms) m = std::min(m, distance(atom, z) - r);
  return m;
}

bool verify_safe_point(const ProjectionProblem& problem, const Vector& z, double tolerance) {
  if (!z.allFinite()) return false;
  const double r = (z - problem.current).norm();
  if (r > problem.u_max + tolerance) return false;
  for (const auto& h : problem.extra)
    if (h.normal.dot(z) > h.offset + tolerance) return false;
  for (const auto& atom : problem.atoms)
    if (r > distance(atom, z) + tolerance) return false;
  return true;
}

Ellipsoid inflate_for_dynamics(const Ellipsoid& atom, double reach_radius) {
  if (!(reach_radius >= 0.0)) throw InvalidArgument("inflate_for_dynamics: negative reach radius");
  if (reach_radius == 0.0) return atom;
  const Ellipsoid reach = Ellipsoid::ball(Vector::Zero(atom.dimension()), reach_radius);
  return minkowski_bound(atom, reach);
}

namespace {

// Value, gradient and Hessian of one atom's constraint h(x, l) = -g(x, l)
// in the translated frame (current position at the origin).
struct AtomEval {
  double value = 0.0;
  Vector gx;
  Vector gl;
  Matrix hxx;
  Matrix hxl;
  Matrix hll;
};

double atom_value(const DualConstraint& c, const Vector& x, const Vector& l) {
  if (c.is_ellipsoid()) {
    const double lam = l(0);
    const Eigen::ArrayXd r = (c.basis().transpose() * x).array() + lam * c.projected_center().array();
    const Eigen::ArrayXd d = c.eigenvalues().array();
    return (d * r.square() / (d + lam)).sum() - lam * (c.center_form() - 1.0);
  }
  return (x - 0.5 * c.normals().transpose() * l).squaredNorm() + c.offsets().dot(l);
}

void atom_eval(const DualConstraint& c, const Vector& x, const Vector& l, bool with_hessian, AtomEval& out) {
  if (c.is_ellipsoid()) {
    const double lam = l(0);
    const Matrix& U = c.basis();
    const Eigen::ArrayXd a = c.projected_center().array();
    const Eigen::ArrayXd d = c.eigenvalues().array();
    const Eigen::ArrayXd r = (U.transpose() * x).array() + lam * a;
    const Eigen::ArrayXd s = d + lam;
    const Eigen::ArrayXd rs = r / s;
    out.value = (d * r * rs).sum() - lam * (c.center_form() - 1.0);
    out.gx = U * (2.0 * d * rs).matrix();
    out.gl.resize(1);
    out.gl(0) = (d * (2.0 * rs * a - rs.square())).sum() - (c.center_form() - 1.0);
    if (with_hessian) {
      // Each term d_i r_i^2 / s_i has Hessian (2 d_i / s_i) v v^T in (p_i, l)
      // with v = (1, a_i - r_i / s_i).
      const Eigen::ArrayXd w = a - rs;
      const Eigen::ArrayXd k = 2.0 * d / s;
      out.hxx = U * k.matrix().asDiagonal() * U.transpose();
      out.hxl = U * (k * w).matrix();
      out.hll.resize(1, 1);
      out.hll(0, 0) = (k * w.square()).sum();
    }
    return;
  }
  const Matrix& A = c.normals();
  const Vector w = x - 0.5 * A.transpose() * l;
  out.value = w.squaredNorm() + c.offsets().dot(l);
  out.gx = 2.0 * w;
  out.gl = c.offsets() - A * w;
  if (with_hessian) {
    const Eigen::Index n = x.size();
    out.hxx = 2.0 * Matrix::Identity(n, n);
    out.hxl = -A.transpose();
    out.hll = 0.5 * A * A.transpose();
  }
}

// Primal-dual interior-point method for
//   minimize f0(core)  s.t.  h_k(x, l_k) - s <= 0,  ||x||^2 - R^2 - s <= 0,
//                             a_j^T x - b_j - s <= 0,  l_k >= 0
// where core = x (phase II, f0 = ||x - goal||^2) or core = (x, s) (phase I,
// f0 = s). The Newton system is block-arrow shaped: each multiplier block
// couples only with the core, so blocks are eliminated by a Schur
// complement onto the core.
class InteriorPoint {
 public:
  InteriorPoint(const ProjectionProblem& p, const Vector& goal_t, std::vector<Halfspace> extra_t, bool phase1)
      : p_(p), goal_(goal_t), extra_(std::move(extra_t)), phase1_(phase1), n_(p.dimension()) {
    nc_ = n_ + (phase1_ ? 1 : 0);
    K_ = p_.constraints.size();
    offsets_.resize(K_ + 1);
    offsets_[0] = nc_;
    for (std::size_t k = 0; k < K_; ++k) offsets_[k + 1] = offsets_[k] + p_.constraints[k].multiplier_count();
    N_ = offsets_[K_];
    // Constraint rows: K atoms, 1 reach, J halfspaces, then one per multiplier.
    mg_ = K_ + 1 + extra_.size();
    m_ = mg_ + static_cast<std::size_t>(N_ - nc_);
  }

  Eigen::Index size() const { return N_; }
  std::size_t constraint_count() const { return m_; }

  Vector leaf(const Vector& z, std::size_t k) const {
    return z.segment(offsets_[k], offsets_[k + 1] - offsets_[k]);
  }

  double slack(const Vector& z) const { return phase1_ ? z(n_) : 0.0; }

  /// All constraint values F_i(z); returns false on a non-finite value.
  bool values(const Vector& z, Vector& F) const {
    F.resize(static_cast<Eigen::Index>(m_));
    const Vector x = z.head(n_);
    const double s = slack(z);
    for (std::size_t k = 0; k < K_; ++k) F(static_cast<Eigen::Index>(k)) = atom_value(p_.constraints[k], x, leaf(z, k)) - s;
    F(static_cast<Eigen::Index>(K_)) = x.squaredNorm() - p_.u_max * p_.u_max - s;
    for (std::size_t j = 0; j < extra_.size(); ++j)
      F(static_cast<Eigen::Index>(K_ + 1 + j)) = extra_[j].normal.dot(x) - extra_[j].offset - s;
    F.tail(N_ - nc_) = -z.tail(N_ - nc_);
    return F.allFinite();
  }

  bool strictly_feasible(const Vector& z) const {
    Vector F;
    return values(z, F) && (F.array() < 0.0).all();
  }

  double objective(const Vector& z) const { return phase1_ ? z(n_) : (z.head(n_) - goal_).squaredNorm(); }

  /// r_dual = grad f0 + sum_i w_i grad F_i
  Vector dual_residual(const Vector& z, const Vector& w) const {
    Vector r = Vector::Zero(N_);
    const Vector x = z.head(n_);
    if (phase1_)
      r(n_) = 1.0;
    else
      r.head(n_) = 2.0 * (x - goal_);
    AtomEval ev;
    for (std::size_t k = 0; k < K_; ++k) {
      const double wk = w(static_cast<Eigen::Index>(k));
      atom_eval(p_.constraints[k], x, leaf(z, k), false, ev);
      r.head(n_) += wk * ev.gx;
      r.segment(offsets_[k], ev.gl.size()) += wk * ev.gl;
      if (phase1_) r(n_) -= wk;
    }
    const double wr = w(static_cast<Eigen::Index>(K_));
    r.head(n_) += wr * 2.0 * x;
    if (phase1_) r(n_) -= wr;
    for (std::size_t j = 0; j < extra_.size(); ++j) {
      const double wj = w(static_cast<Eigen::Index>(K_ + 1 + j));
      r.head(n_) += wj * extra_[j].normal;
      if (phase1_) r(n_) -= wj;
    }
    r.tail(N_ - nc_) -= w.tail(N_ - nc_);
    return r;
  }

  double residual_norm(const Vector& z, const Vector& w, const Vector& F, double t) const {
    const Vector rd = dual_residual(z, w);
    const Vector rc = -(w.array() * F.array()).matrix() - Vector::Constant(F.size(), 1.0 / t);
    return std::sqrt(rd.squaredNorm() + rc.squaredNorm());
  }

  /// Solves the reduced primal-dual system for (dz, dw). Returns false when
  /// a factorization breaks down.
  bool newton_step(const Vector& z, const Vector& w, const Vector& F, double t, Vector& dz, Vector& dw) const {
    const Vector x = z.head(n_);
    Matrix Hc = Matrix::Zero(nc_, nc_);
    Vector rhs_c = Vector::Zero(nc_);
    if (phase1_) {
      rhs_c(n_) = -1.0;
    } else {
      Hc.topLeftCorner(n_, n_).diagonal().array() += 2.0;
      rhs_c.head(n_) = -2.0 * (x - goal_);
    }

    // Reach and halfspace rows touch only the core.
    auto add_core_row = [&](double Fi, double wi, const Vector& gx, double hxx_scale) {
      Vector g = Vector::Zero(nc_);
      g.head(n_) = gx;
      if (phase1_) g(n_) = -1.0;
      const double q = wi / -Fi;
      Hc += q * g * g.transpose();
      if (hxx_scale != 0.0) Hc.topLeftCorner(n_, n_).diagonal().array() += wi * hxx_scale;
      rhs_c -= g / (t * -Fi);
    };
    add_core_row(F(static_cast<Eigen::Index>(K_)), w(static_cast<Eigen::Index>(K_)), 2.0 * x, 2.0);
    for (std::size_t j = 0; j < extra_.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(K_ + 1 + j);
      add_core_row(F(i), w(i), extra_[j].normal, 0.0);
    }

    std::vector<Matrix> Y1(K_);
    std::vector<Vector> Y2(K_);
    std::vector<Matrix> Hck(K_);
    AtomEval ev;
    for (std::size_t k = 0; k < K_; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      const Eigen::Index mk = offsets_[k + 1] - offsets_[k];
      const Vector lk = leaf(z, k);
      atom_eval(p_.constraints[k], x, lk, true, ev);
      const double Fi = F(ki);
      const double wi = w(ki);
      const double q = wi / -Fi;

      Vector gc = Vector::Zero(nc_);
      gc.head(n_) = ev.gx;
      if (phase1_) gc(n_) = -1.0;

      Hc.topLeftCorner(n_, n_) += wi * ev.hxx;
      Hc += q * gc * gc.transpose();
      rhs_c -= gc / (t * -Fi);

      Matrix Hcl = Matrix::Zero(nc_, mk);
      Hcl.topRows(n_) = wi * ev.hxl;
      Hcl += q * gc * ev.gl.transpose();

      Matrix Hll = wi * ev.hll + q * ev.gl * ev.gl.transpose();
      Vector rhs_l = -ev.gl / (t * -Fi);
      // Multiplier positivity rows: F = -l.
      const Vector wl = w.segment(static_cast<Eigen::Index>(mg_) + (offsets_[k] - nc_), mk);
      Hll.diagonal().array() += wl.array() / lk.array();
      rhs_l.array() += 1.0 / (t * lk.array());

      Eigen::LLT<Matrix> llt(Hll);
      if (llt.info() != Eigen::Success) return false;
      Y1[k] = llt.solve(Hcl.transpose());
      Y2[k] = llt.solve(rhs_l);
      Hc -= Hcl * Y1[k];
      rhs_c -= Hcl * Y2[k];
      Hck[k] = std::move(Hcl);
    }

    Eigen::LDLT<Matrix> ldlt(Hc);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector dc = ldlt.solve(rhs_c);
    if (!dc.allFinite()) return false;

    dz.resize(N_);
    dz.head(nc_) = dc;
    for (std::size_t k = 0; k < K_; ++k)
      dz.segment(offsets_[k], offsets_[k + 1] - offsets_[k]) = Y2[k] - Y1[k] * dc;

    // dw_i = -w_i + 1/(t(-F_i)) + (w_i/(-F_i)) grad F_i^T dz
    dw.resize(static_cast<Eigen::Index>(m_));
    const Vector dx = dc.head(n_);
    const double ds = phase1_ ? dc(n_) : 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      atom_eval(p_.constraints[k], x, leaf(z, k), false, ev);
      const double dF = ev.gx.dot(dx) + ev.gl.dot(dz.segment(offsets_[k], ev.gl.size())) - ds;
      dw(ki) = -w(ki) + 1.0 / (t * -F(ki)) + w(ki) / -F(ki) * dF;
    }
    {
      const auto i = static_cast<Eigen::Index>(K_);
      const double dF = 2.0 * x.dot(dx) - ds;
      dw(i) = -w(i) + 1.0 / (t * -F(i)) + w(i) / -F(i) * dF;
    }
    for (std::size_t j = 0; j < extra_.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(K_ + 1 + j);
      const double dF = extra_[j].normal.dot(dx) - ds;
      dw(i) = -w(i) + 1.0 / (t * -F(i)) + w(i) / -F(i) * dF;
    }
    const Eigen::Index nl = N_ - nc_;
    const auto base = static_cast<Eigen::Index>(mg_);
    for (Eigen::Index i = 0; i < nl; ++i) {
      const double Fi = -z(nc_ + i);
      const double wi = w(base + i);
      dw(base + i) = -wi + 1.0 / (t * -Fi) + wi / -Fi * (-dz(nc_ + i));
    }
    return dz.allFinite() && dw.allFinite();
  }

  struct Outcome {
    Vector z;
    Vector w;
    int iterations = 0;
    double gap = 0.0;
    double residual = 0.0;
    bool converged = false;
  };

  /// Runs from a strictly feasible z. In phase I, stops as soon as the slack
  /// drops below -stop_slack.
  Outcome run(Vector z, const ProjectionOptions& opts, double gap_tol, double stop_slack) const {
    constexpr double mu = 10.0;
    constexpr double alpha = 0.01;
    constexpr double beta = 0.5;
    Vector F;
    values(z, F);
    Vector w = (-F.array()).inverse().matrix();

    Outcome out;
    const double m = static_cast<double>(m_);
    Vector dz, dw, Fn;
    for (int it = 0; it < opts.max_iterations; ++it) {
      out.iterations = it;
      const double eta = -F.dot(w);
      const Vector rd = dual_residual(z, w);
      out.gap = eta;
      out.residual = rd.norm();
      if (phase1_ && slack(z) < -stop_slack) {
        out.converged = true;
        break;
      }
      if (eta <= gap_tol && out.residual <= opts.residual_tolerance) {
        out.converged = true;
        break;
      }
      const double t = mu * m / eta;
      if (!newton_step(z, w, F, t, dz, dw)) break;

      double step = 1.0;
      for (Eigen::Index i = 0; i < dw.size(); ++i)
        if (dw(i) < 0.0) step = std::min(step, -w(i) / dw(i));
      step *= 0.99;

      while (step > 1e-16) {
        const Vector zn = z + step * dz;
        if (values(zn, Fn) && (Fn.array() < 0.0).all()) break;
        step *= beta;
      }
      if (step <= 1e-16) break;

      const double r0 = residual_norm(z, w, F, t);
      while (step > 1e-16) {
        const Vector zn = z + step * dz;
        const Vector wn = w + step * dw;
        values(zn, Fn);
        if (residual_norm(zn, wn, Fn, t) <= (1.0 - alpha * step) * r0) break;
        step *= beta;
      }
      if (step <= 1e-16) break;

      z += step * dz;
      w += step * dw;
      values(z, F);
      out.iterations = it + 1;
    }
    out.gap = -F.dot(w);
    out.residual = dual_residual(z, w).norm();
    out.z = std::move(z);
    out.w = std::move(w);
    return out;
  }

  /// Log-barrier path following from a strictly feasible z. Slower than
  /// run() but monotone in the barrier function, so it also gets through
  /// the badly centered regions where run() crawls. Newton steps reuse
  /// newton_step() with the duals pinned to their central values
  /// w = 1 / (t (-F)).
  Outcome run_barrier(Vector z, const ProjectionOptions& opts, double gap_tol) const {
    constexpr double mu = 20.0;
    constexpr double alpha = 0.01;
    constexpr double beta = 0.5;
    const double m = static_cast<double>(m_);
    Vector F, Fn, w, dz, dw;
    values(z, F);
    auto barrier = [&](const Vector& zz, const Vector& FF, double t) {
      return t * objective(zz) - (-FF.array()).log().sum();
    };

    // The barrier loses accuracy long before a primal-dual run does.
    const double target_gap = std::max(gap_tol, 1e-10 * std::max(1.0, goal_.squaredNorm()));
    Outcome out;
    double t = m / std::max(1.0, objective(z));
    int newton = 0;
    const int budget = 20 * opts.max_iterations;
    while (newton < budget) {
      bool centered = false;
      while (newton < budget) {
        w = (-1.0 / (t * F.array())).matrix();
        if (!newton_step(z, w, F, t, dz, dw)) break;
        ++newton;
        const double slope = t * dual_residual(z, w).dot(dz);
        // Half the squared Newton decrement.
        if (!(slope < 0.0) || -0.5 * slope <= 1e-10) {
          centered = true;
          break;
        }
        const double phi = barrier(z, F, t);
        double step = 1.0;
        bool moved = false;
        while (step > 1e-12) {
          const Vector zn = z + step * dz;
          if (values(zn, Fn) && (Fn.array() < 0.0).all()) {
            const double phin = barrier(zn, Fn, t);
            if (phin <= phi + alpha * step * slope) {
              moved = phin < phi;
              break;
            }
          }
          step *= beta;
        }
        if (!moved) {
          centered = true;  // no measurable progress left at this t
          break;
        }
        z += step * dz;
        values(z, F);
      }
      if (!centered) break;
      if (m / t <= target_gap) {
        out.converged = true;
        break;
      }
      t *= mu;
    }
    w = (-1.0 / (t * F.array())).matrix();
    out.iterations = newton;
    out.gap = -F.dot(w);
    out.residual = dual_residual(z, w).norm();
    out.z = std::move(z);
    out.w = std::move(w);
    return out;
  }

  /// Multipliers that make each atom constraint strictly negative at x = 0.
  Vector initial_point(const std::vector<Vector>& warm) const {
    Vector z = Vector::Zero(N_);
    const Vector x0 = Vector::Zero(n_);
    const bool use_warm = warm.size() == K_;
    for (std::size_t k = 0; k < K_; ++k) {
      const DualConstraint& c = p_.constraints[k];
      const Eigen::Index mk = c.multiplier_count();
      Vector best;
      if (use_warm && warm[k].size() == mk && (warm[k].array() > 0.0).all() && warm[k].allFinite() &&
          atom_value(c, x0, warm[k]) < 0.0) {
        best = warm[k];
      } else if (c.is_ellipsoid()) {
        // h(0, l) ~ -l (c - 1) + O(l^2): scan a geometric grid starting at 1.
        Vector l(1);
        l(0) = 1.0;
        best = l;
        double best_v = atom_value(c, x0, l);
        for (int e = 1; e <= 60; ++e) {
          for (double sgn : {1.0, -1.0}) {
            l(0) = std::ldexp(1.0, static_cast<int>(sgn) * e);
            const double v = atom_value(c, x0, l);
            if (v < best_v) {
              best_v = v;
              best = l;
            }
          }
        }
      } else {
        best = polyhedron_start(c);
      }
      z.segment(offsets_[k], mk) = best;
    }
    return z;
  }

 private:
  static Vector polyhedron_start(const DualConstraint& c) {
    const Matrix& A = c.normals();
    const Vector& b = c.offsets();
    const Eigen::Index m = A.rows();
    Eigen::Index j = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = -b(i) / A.row(i).norm();
      if (v > worst) {
        worst = v;
        j = i;
      }
    }
    const Vector x0 = Vector::Zero(A.cols());
    double delta = 1e-3 * std::abs(b(j)) / (b.cwiseAbs().sum() + 1.0);
    Vector best = Vector::Constant(m, 1e-300);
    for (int attempt = 0; attempt < 20 && delta > 1e-300; ++attempt, delta *= 1e-3) {
      Vector v = Vector::Constant(m, delta);
      v(j) += 1.0;
      const double bv = b.dot(v);
      const double av = (A.transpose() * v).squaredNorm();
      if (!(bv < 0.0) || av == 0.0) continue;
      const Vector l = v * (-2.0 * bv / av);
      if ((l.array() > 0.0).all() && atom_value(c, x0, l) < 0.0) return l;
      best = l;
    }
    return best;
  }

  const ProjectionProblem& p_;
  Vector goal_;
  std::vector<Halfspace> extra_;
  bool phase1_;
  Eigen::Index n_;
  Eigen::Index nc_ = 0;
  std::size_t K_ = 0;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index N_ = 0;
  std::size_t mg_ = 0;
  std::size_t m_ = 0;
};

ProjectionFailure fail(FailureReason r, std::string detail) { return ProjectionFailure{r, std::move(detail)}; }

}  // namespace

ProjectionResult solve_projection(const ProjectionProblem& p, const ProjectionOptions& opts) {
  const Eigen::Index n = p.dimension();
  if (n == 0 || p.goal.size() != n || p.constraints.size() != p.atoms.size() || !(p.u_max > 0.0) ||
      !(p.epsilon >= 0.0))
    return fail(FailureReason::numeric_failure, "malformed projection problem");

  try {
    for (std::size_t k = 0; k < p.atoms.size(); ++k) {
      const double d = distance(p.atoms[k], p.current);
      if (d <= opts.unsafe_distance) {
        std::ostringstream os;
        os << "atom " << k << " is within " << d << " m of the current position";
        return fail(FailureReason::current_position_unsafe, os.str());
      }
    }

    ProjectedPoint out;
    Vector unshrunk;

    // A goal that already satisfies the original constraints is its own
    // projection.
    bool goal_ok = (p.goal - p.current).norm() <= p.u_max;
    for (const auto& h : p.extra) goal_ok = goal_ok && h.normal.dot(p.goal) <= h.offset;
    if (goal_ok) {
      const double r = (p.goal - p.current).norm();
      for (const auto& atom : p.atoms) {
        if (r > distance(atom, p.goal)) {
          goal_ok = false;
          break;
        }
      }
    }

    if (goal_ok) {
      unshrunk = p.goal;
      out.stats.goal_feasible = true;
    } else {
      std::vector<Halfspace> extra_t;
      extra_t.reserve(p.extra.size());
      bool need_phase1 = false;
      for (const auto& h : p.extra) {
        const double off = h.offset - h.normal.dot(p.current);
        extra_t.push_back({h.normal, off});
        if (!(off > 0.0)) need_phase1 = true;
      }
      const Vector goal_t = p.goal - p.current;

      InteriorPoint solver(p, goal_t, extra_t, false);
      Vector z0 = solver.initial_point(p.initial_multipliers);

      if (need_phase1) {
        InteriorPoint ph1(p, goal_t, extra_t, true);
        Vector z1(ph1.size());
        z1.head(n) = z0.head(n);
        z1.tail(ph1.size() - n - 1) = z0.tail(z0.size() - n);
        z1(n) = 0.0;
        Vector F;
        ph1.values(z1, F);
        z1(n) = F.head(F.size() - (ph1.size() - n - 1)).maxCoeff() + 1.0;
        const auto r1 = ph1.run(z1, opts, 1e-12, 1e-9);
        out.stats.phase1_iterations = r1.iterations;
        if (!(r1.z(n) < 0.0)) {
          if (r1.converged || r1.gap < 1e-9) {
            std::ostringstream os;
            os << "phase I optimum " << r1.z(n) << " >= 0";
            return fail(FailureReason::infeasible, os.str());
          }
          return fail(FailureReason::numeric_failure, "phase I did not converge");
        }
        z0.head(n) = r1.z.head(n);
        z0.tail(z0.size() - n) = r1.z.tail(ph1.size() - n - 1);
      }

      if (!solver.strictly_feasible(z0))
        return fail(FailureReason::numeric_failure, "could not construct a strictly feasible starting point");

      const double gap_tol = opts.gap_tolerance * std::max(1.0, goal_t.squaredNorm());
      auto r = solver.run(z0, opts, gap_tol, 0.0);
      if (!r.converged && !p.initial_multipliers.empty() && !need_phase1) {
        // Warm multipliers can start the iterates next to the boundary; retry cold.
        const Vector cold = solver.initial_point({});
        if (solver.strictly_feasible(cold)) {
          auto rc = solver.run(cold, opts, gap_tol, 0.0);
          rc.iterations += r.iterations;
          r = std::move(rc);
        }
      }
      if (!r.converged) {
        auto rb = solver.run_barrier(solver.initial_point({}), opts, gap_tol);
        rb.iterations += r.iterations;
        if (rb.converged || rb.gap < r.gap) r = std::move(rb);
      }
      out.stats.iterations = r.iterations;
      out.stats.surrogate_gap = r.gap;
      out.stats.kkt_residual = std::max(r.gap, r.residual);
      if (!r.converged && !(r.gap <= 1e-6 && r.residual <= 1e-6)) {
        std::ostringstream os;
        os << "interior point stalled after " << r.iterations << " iterations (gap " << r.gap << ", residual "
           << r.residual << ")";
        return fail(FailureReason::numeric_failure, os.str());
      }
      unshrunk = p.current + r.z.head(n);
      out.multipliers.reserve(p.constraints.size());
      Eigen::Index off = n;
      for (const auto& c : p.constraints) {
        out.multipliers.push_back(r.z.segment(off, c.multiplier_count()));
        off += c.multiplier_count();
      }
    }

    if (!verify_safe_point(p, unshrunk, opts.verify_tolerance)) {
      std::ostringstream os;
      os << "solution failed independent safety verification (reach " << (unshrunk - p.current).norm() - p.u_max
         << ", margin " << separation_margin(p, unshrunk) << ", iterations " << out.stats.iterations << ", gap "
         << out.stats.surrogate_gap << ")";
      return fail(FailureReason::numeric_failure, os.str());
    }

    out.unshrunk = unshrunk;
    out.point = unshrunk;
    if (p.epsilon > 0.0) {
      // Largest theta on the grid whose shrunk point keeps an epsilon margin
      // to every atom; theta = 0 holds position.
      double theta = 0.0;
      for (int k = opts.theta_grid; k >= 1; --k) {
        const double th = static_cast<double>(k) / opts.theta_grid;
        const Vector xt = p.current + th * (unshrunk - p.current);
        if (separation_margin(p, xt) >= p.epsilon) {
          theta = th;
          break;
        }
      }
      out.stats.theta = theta;
      out.point = p.current + theta * (unshrunk - p.current);
    }
    return out;
  } catch (const NumericFailure& e) {
    return fail(FailureReason::numeric_failure, e.what());
  } catch (const EmptySetError& e) {
    return fail(FailureReason::numeric_failure, e.what());
  }
}

}  // namespace gvc
