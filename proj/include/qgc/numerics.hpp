#pragma once

// Dense linear algebra helpers, Lyapunov/Riccati solvers and a fixed-step
// matrix ODE integrator. Everything here is sized for small systems
// (state dimension up to about 20); the Lyapunov solve is a dense
// Kronecker-vectorized system of size n^2.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qgc/error.hpp"

namespace qgc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;

inline std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double min_eig_sym(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_real_eig(const Matrix& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Smallest |Re(lambda)| over the spectrum, i.e. the slowest mode's rate.
inline double slowest_rate(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().real().cwiseAbs().minCoeff();
}

inline bool is_hurwitz(const Matrix& a, double margin = 1e-12) {
  return max_real_eig(a) < -margin;
}

/// Symmetric PSD square root via eigendecomposition; tiny negative
/// eigenvalues from rounding are clamped to zero.
inline Matrix sqrt_psd(const Matrix& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Spectral radius max|lambda_i(M)|. Dense eigensolve up to dimension 32,
/// power iteration on the growth rate of ||M^k v|| with random restarts
/// beyond that.
inline double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral_radius needs a square matrix, got " + shape_of(m));
  }
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 32) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int restart = 0; restart < 4; ++restart) {
    Vector v = Vector::NullaryExpr(m.rows(), [&] { return normal(rng); });
    v.normalize();
    constexpr int kBurn = 200;
    constexpr int kIter = 2000;
    double log_growth = 0.0;
    for (int k = 0; k < kBurn + kIter; ++k) {
      v = m * v;
      const double nrm = v.norm();
      if (nrm == 0.0) {
        log_growth = -std::numeric_limits<double>::infinity();
        break;
      }
      if (k >= kBurn) log_growth += std::log(nrm);
      v /= nrm;
    }
    best = std::max(best, std::exp(log_growth / kIter));
  }
  return best;
}

/// Solves A P + P A^T + Q = 0 by Kronecker vectorization
/// (I kron A + A kron I) vec(P) = -vec(Q). A must be Hurwitz.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve_lyapunov: A is " + shape_of(a) + ", Q is " + shape_of(q));
  }
  if (n == 0) return Matrix(0, 0);
  const double lead = max_real_eig(a);
  if (!(lead < -1e-12)) {
    throw Error(ErrorCode::NotHurwitz,
                "solve_lyapunov: max Re(lambda(A)) = " + std::to_string(lead));
  }
  const Eigen::Index n2 = n * n;
  Matrix k = Matrix::Zero(n2, n2);
  for (Eigen::Index j = 0; j < n; ++j) {
    // (I kron A): block-diagonal copies of A.
    k.block(j * n, j * n, n, n) += a;
    // (A kron I): a(j, l) * I in block (j, l).
    for (Eigen::Index l = 0; l < n; ++l) {
      if (a(j, l) != 0.0) k.block(j * n, l * n, n, n).diagonal().array() += a(j, l);
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  lu.setThreshold(1e-14);
  if (lu.rank() < n2) {
    throw Error(ErrorCode::SingularSystem, "solve_lyapunov: Kronecker system is rank deficient");
  }
  const Vector rhs = -Eigen::Map<const Vector>(Matrix(q).data(), n2);
  Vector p = lu.solve(rhs);
  Matrix pm = Eigen::Map<Matrix>(p.data(), n, n);
  return symmetrize(pm);
}

inline double lyapunov_residual(const Matrix& a, const Matrix& p, const Matrix& q) {
  return (a * p + p * a.transpose() + q).norm();
}

/// Residual of A^T X + X A - X S X + Q.
inline Matrix are_residual(const Matrix& a, const Matrix& s, const Matrix& q, const Matrix& x) {
  return a.transpose() * x + x * a - x * s * x + q;
}

struct AreOptions {
  int max_iterations = 200;
};

/// Stabilizing solution of A^T X + X A - X S X + Q = 0 by Newton-Kleinman.
///
/// S is the symmetric quadratic weight. It is usually B Rw^{-1} B^T but may
/// be indefinite, as in the game-type equations of the guaranteed-cost
/// synthesis; Newton still converges locally there, and the result is
/// certified by its residual and the Hurwitz property of A - S X.
///
/// The initial iterate is X = 0 when A is already Hurwitz. Otherwise the
/// spectrum is shifted by beta and Z solving
/// (A + beta I) Z + Z (A + beta I)^T = 2 S gives X0 = Z^{-1}, which places
/// every eigenvalue of A - S X0 on Re = -beta when S is PSD and (A, S)
/// controllable.
inline Matrix solve_are_quadratic(const Matrix& a, const Matrix& s, const Matrix& q,
                                  const AreOptions& opts = {}) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || s.rows() != n || s.cols() != n || q.rows() != n || q.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "solve_are: A " + shape_of(a) + ", S " + shape_of(s) +
                                                  ", Q " + shape_of(q));
  }
  if (n == 0) return Matrix(0, 0);
  const Matrix sym_s = symmetrize(s);
  const Matrix sym_q = symmetrize(q);
  const double q_norm = sym_q.norm();

  Matrix x = Matrix::Zero(n, n);
  if (!is_hurwitz(a)) {
    Eigen::EigenSolver<Matrix> es(a, false);
    const double min_re = es.eigenvalues().real().minCoeff();
    const double beta = std::max(1.0, 1.0 - min_re);
    const Matrix shifted = -(a + beta * Matrix::Identity(n, n));
    Matrix z;
    try {
      z = solve_lyapunov(shifted, 2.0 * sym_s);
    } catch (const Error& e) {
      throw Error(ErrorCode::NoStabilizingSolution, std::string("initial gain: ") + e.what());
    }
    Eigen::FullPivLU<Matrix> lu(z);
    if (!lu.isInvertible()) {
      throw Error(ErrorCode::NoStabilizingSolution, "initial gain: (A, S) not controllable enough to shift");
    }
    x = symmetrize(lu.inverse());
    if (!is_hurwitz(a - sym_s * x)) {
      throw Error(ErrorCode::NoStabilizingSolution, "initial gain does not stabilize A - S X0");
    }
  }

  // Residual tolerances are relative to the size of the terms being cancelled.
  const double a_norm = a.norm(), s_norm = sym_s.norm();
  auto scale = [&](const Matrix& xm) {
    const double xn = xm.norm();
    return 1.0 + q_norm + 2.0 * a_norm * xn + s_norm * xn * xn;
  };
  bool converged = false;
  double prev_res = INFINITY;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Matrix closed = a - sym_s * x;
    Matrix next;
    try {
      next = solve_lyapunov(closed.transpose(), sym_q + x * sym_s * x);
    } catch (const Error& e) {
      throw Error(ErrorCode::NoStabilizingSolution,
                  "Newton step " + std::to_string(it) + " failed: " + e.what());
    }
    if (!next.allFinite()) break;
    const double step = (next - x).norm();
    const double res = are_residual(a, sym_s, sym_q, next).norm();
    const double sc = scale(next);
    if (res >= prev_res && prev_res <= 1e-9 * sc) {
      converged = true;
      break;
    }
    x = next;
    prev_res = res;
    if (res <= 1e-14 * sc || step <= 1e-15 * (1.0 + x.norm())) {
      converged = true;
      break;
    }
  }
  const double res = are_residual(a, sym_s, sym_q, x).norm();
  if (!x.allFinite() || (!converged && res > 1e-9 * scale(x))) {
    throw Error(ErrorCode::NoStabilizingSolution,
                "Newton-Kleinman did not converge in " + std::to_string(opts.max_iterations) + " iterations");
  }
  if (res > 1e-9 * scale(x)) {
    throw Error(ErrorCode::NoStabilizingSolution, "residual " + std::to_string(res) + " too large");
  }
  if (!is_hurwitz(a - sym_s * x)) {
    throw Error(ErrorCode::NoStabilizingSolution, "A - S X is not Hurwitz");
  }
  return x;
}

/// A^T X + X A - X B Rw^{-1} B^T X + Q = 0 with Rw symmetric positive definite.
inline Matrix solve_are(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& rw,
                        const AreOptions& opts = {}) {
  if (b.rows() != a.rows() || rw.rows() != b.cols() || rw.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "solve_are: A " + shape_of(a) + ", B " + shape_of(b) + ", Rw " + shape_of(rw));
  }
  Eigen::LLT<Matrix> llt(symmetrize(rw));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "solve_are: Rw is not positive definite");
  }
  const Matrix s = b * llt.solve(b.transpose());
  return solve_are_quadratic(a, s, q, opts);
}

/// Sampled solution of a matrix ODE. Samples are stored in increasing time
/// order regardless of integration direction.
struct OdeTrajectory {
  std::vector<double> grid;
  std::vector<Matrix> values;

  std::size_t size() const { return grid.size(); }
  const Matrix& front() const { return values.front(); }
  const Matrix& back() const { return values.back(); }
};

using MatrixRhs = std::function<Matrix(double, const Matrix&)>;

/// Classical RK4 with `steps` equal steps from t0 to t1 (t1 < t0 integrates
/// backward). Each value is symmetrized after the step.
inline OdeTrajectory integrate_matrix_ode(const MatrixRhs& rhs, const Matrix& init, double t0, double t1,
                                          int steps) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "integrate_matrix_ode: steps must be >= 1");
  const double h = (t1 - t0) / steps;
  OdeTrajectory traj;
  traj.grid.reserve(steps + 1);
  traj.values.reserve(steps + 1);
  Matrix p = symmetrize(init);
  traj.grid.push_back(t0);
  traj.values.push_back(p);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Matrix k1 = rhs(t, p);
    const Matrix k2 = rhs(t + 0.5 * h, p + 0.5 * h * k1);
    const Matrix k3 = rhs(t + 0.5 * h, p + 0.5 * h * k2);
    const Matrix k4 = rhs(t + h, p + h * k3);
    p = symmetrize(p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e12) {
      throw Error(ErrorCode::Blowup, "matrix ODE escaped at t = " + std::to_string(t + h));
    }
    traj.grid.push_back(k + 1 == steps ? t1 : t0 + (k + 1) * h);
    traj.values.push_back(p);
  }
  if (h < 0) {
    std::reverse(traj.grid.begin(), traj.grid.end());
    std::reverse(traj.values.begin(), traj.values.end());
  }
  return traj;
}

/// Composite trapezoid of f(t_i) over a sample grid.
template <typename F>
double trapezoid(const std::vector<double>& grid, F&& f) {
  double acc = 0.0;
  if (grid.size() < 2) return acc;
  double prev = f(std::size_t{0});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = f(i);
    acc += 0.5 * (grid[i] - grid[i - 1]) * (prev + cur);
    prev = cur;
  }
  return acc;
}

}  // namespace qgc
