#pragma once

// Reference computations used only by the tests. They are written against
// plain Eigen and do not call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline Mat vec_to_mat(const Vec& v, Eigen::Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

/// P with A P + P A^T + Q = 0, solved as (I (x) A + A (x) I) vec P = -vec Q by QR.
inline Mat lyapunov(const Mat& a, const Mat& q) {
  const auto n = a.rows();
  const Mat i = Mat::Identity(n, n);
  const Mat k = kron(i, a) + kron(a, i);
  const Vec rhs = -Eigen::Map<const Vec>(q.data(), n * n);
  return vec_to_mat(k.colPivHouseholderQr().solve(rhs), n);
}

inline double max_re(const Mat& a) { return a.eigenvalues().real().maxCoeff(); }

/// Stabilizing solution of A^T X + X A - X S X + Q = 0 from the stable
/// invariant subspace of the Hamiltonian matrix [[A, -S], [-Q, -A^T]].
inline Mat are_eigen(const Mat& a, const Mat& s, const Mat& q) {
  const auto n = a.rows();
  Mat h(2 * n, 2 * n);
  h << a, -s, -q, -a.transpose();
  Eigen::ComplexEigenSolver<Mat> es(h);
  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    if (es.eigenvalues()(j).real() < 0.0) {
      if (k == n) throw std::runtime_error("are_eigen: too many stable eigenvalues");
      basis.col(k++) = es.eigenvectors().col(j);
    }
  }
  if (k != n) throw std::runtime_error("are_eigen: no stable Lagrangian subspace");
  const Eigen::MatrixXcd x = basis.bottomRows(n) * basis.topRows(n).inverse();
  const Mat xr = x.real();
  return 0.5 * (xr + xr.transpose());
}

/// Kronecker-Newton refinement of an initial stabilizing X. Each Newton step
/// solves (A - S X)^T X+ + X+ (A - S X) + Q + X S X = 0 with dense QR.
inline Mat are_kron_newton(const Mat& a, const Mat& s, const Mat& q, Mat x, int iterations = 50) {
  for (int it = 0; it < iterations; ++it) {
    const Mat ak = a - s * x;
    const Mat next = lyapunov(ak.transpose(), q + x * s * x);
    const double step = (next - x).norm();
    x = 0.5 * (next + next.transpose());
    if (step < 1e-14 * (1.0 + x.norm())) break;
  }
  return x;
}

inline Mat are(const Mat& a, const Mat& s, const Mat& q) { return are_kron_newton(a, s, q, are_eigen(a, s, q)); }

/// Stabilizing root of 2 a x - s x^2 + q = 0 (a - s x < 0).
inline double scalar_are(double a, double s, double q) {
  if (s == 0.0) return -q / (2.0 * a);
  const double disc = a * a + s * q;
  if (disc < 0.0) throw std::runtime_error("scalar_are: no real root");
  const double r1 = (a + std::sqrt(disc)) / s;
  const double r2 = (a - std::sqrt(disc)) / s;
  return (a - s * r1 < 0.0) ? r1 : r2;
}

/// Gaussian matrix with i.i.d. N(0, 1) entries.
inline Mat randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Mat::NullaryExpr(r, c, [&] { return n(rng); });
}

/// Random matrix shifted so that its spectral abscissa is -margin.
inline Mat random_hurwitz(Eigen::Index n, std::mt19937_64& rng, double margin = 0.5) {
  Mat a = randn(n, n, rng);
  a -= (max_re(a) + margin) * Mat::Identity(n, n);
  return a;
}

/// [B, A B, ..., A^{n-1} B].
inline Mat controllability(const Mat& a, const Mat& b) {
  const Eigen::Index n = a.rows(), m = b.cols();
  Mat k(n, n * m);
  Mat p = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    k.middleCols(i * m, m) = p;
    p = a * p;
  }
  return k;
}

inline double min_singular(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues().tail(1)(0);
}

struct Lqg {
  Mat A_K, B_K, C_K;
};

/// Textbook LQG controller for dx = (A x + B1 u) dt + B0 dv,
/// dy = (C2 x + D22 u) dt + D20 dv with cost x^T R x + u^T G u: a Kalman
/// filter with correlated noise and an LQR state feedback.
inline Lqg lqg(const Mat& a, const Mat& b0, const Mat& b1, const Mat& c2, const Mat& d20, const Mat& d22,
               const Mat& r, const Mat& g) {
  const Mat gam_inv = (d20 * d20.transpose()).inverse();
  const Mat a_bar = a - b0 * d20.transpose() * gam_inv * c2;
  const Mat w = b0 * (Mat::Identity(b0.cols(), b0.cols()) - d20.transpose() * gam_inv * d20) * b0.transpose();
  const Mat y = are(a_bar.transpose(), c2.transpose() * gam_inv * c2, w);
  const Mat l = (y * c2.transpose() + b0 * d20.transpose()) * gam_inv;
  const Mat x = are(a, b1 * g.inverse() * b1.transpose(), r);
  const Mat k = -g.inverse() * b1.transpose() * x;
  return {a + b1 * k - l * c2 - l * d22 * k, l, k};
}

}  // namespace oracle
