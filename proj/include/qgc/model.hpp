#pragma once

// Uncertain linear quantum system in its classical-equivalent form, the
// output-feedback controller, and closed-loop assembly for a fixed
// uncertainty matrix Delta.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "qgc/numerics.hpp"

namespace qgc {

/// Matrices of
///   dx = ([A + B0 Delta C0] x + [B1 + B0 Delta D0] u) dt + B0 dv
///   mu = C1 x + D12 u
///   dy = ([C2 + D20 Delta C0] x + [D22 + D20 Delta D0] u) dt + D20 dv
/// plus initial-state moments. Delta is n_v x p where p = C0.rows().
struct UncertainSystem {
  Matrix A, B0, B1, C0, C1, C2, D0, D12, D20, D22;
  Vector x0_mean;
  Matrix x0_cov;
  // Imaginary part J_v of the Ito matrix F_v = I + i J_v. Only the
  // symmetric part of F_v enters moment equations.
  Matrix ito_imag;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index nv() const { return B0.cols(); }
  Eigen::Index nu() const { return B1.cols(); }
  Eigen::Index ny() const { return C2.rows(); }
  Eigen::Index nz() const { return C0.rows(); }
  Eigen::Index nmu() const { return C1.rows(); }
  Eigen::Index delta_rows() const { return nv(); }
  Eigen::Index delta_cols() const { return nz(); }

  void validate() const;
};

namespace detail {
inline void expect_shape(const Matrix& m, std::string_view name, Eigen::Index rows, Eigen::Index cols,
                         std::string_view against) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " is " + shape_of(m) + " but " + std::string(against) + " requires " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
}
}  // namespace detail

inline void UncertainSystem::validate() const {
  using detail::expect_shape;
  const auto nx = n();
  expect_shape(A, "A", nx, nx, "square A");
  expect_shape(B0, "B0", nx, B0.cols(), "A");
  expect_shape(B1, "B1", nx, B1.cols(), "A");
  expect_shape(C0, "C0", C0.rows(), nx, "A");
  expect_shape(C1, "C1", C1.rows(), nx, "A");
  expect_shape(C2, "C2", C2.rows(), nx, "A");
  expect_shape(D0, "D0", nz(), nu(), "C0 and B1");
  expect_shape(D12, "D12", nmu(), nu(), "C1 and B1");
  expect_shape(D20, "D20", ny(), nv(), "C2 and B0");
  expect_shape(D22, "D22", ny(), nu(), "C2 and B1");
  if (x0_mean.size() != nx) {
    throw Error(ErrorCode::DimensionMismatch, "x0_mean has length " + std::to_string(x0_mean.size()) +
                                                  " but A is " + shape_of(A));
  }
  expect_shape(x0_cov, "Y0", nx, nx, "A");
  expect_shape(ito_imag, "ito_imag", nv(), nv(), "B0");
  if ((x0_cov - x0_cov.transpose()).norm() > 1e-10 * (1.0 + x0_cov.norm())) {
    throw Error(ErrorCode::InvalidArgument, "Y0 is not symmetric");
  }
  if (nx > 0 && min_eig_sym(x0_cov) < -1e-10) {
    throw Error(ErrorCode::InvalidArgument, "Y0 is not positive semidefinite");
  }
  if ((ito_imag + ito_imag.transpose()).norm() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "ito_imag is not skew-symmetric");
  }
}

struct CostWeights {
  Matrix R;  // n x n, PSD
  Matrix G;  // n_u x n_u, PD
};

/// C1 = [R^{1/2}; 0] and D12 = [0; G^{1/2}] so that mu^T mu = x^T R x + u^T G u.
inline void install_cost_weights(UncertainSystem& sys, const CostWeights& w) {
  const auto nx = sys.n();
  const auto nu = sys.nu();
  detail::expect_shape(w.R, "R", nx, nx, "A");
  detail::expect_shape(w.G, "G", nu, nu, "B1");
  sys.C1 = Matrix::Zero(nx + nu, nx);
  sys.C1.topRows(nx) = sqrt_psd(w.R);
  sys.D12 = Matrix::Zero(nx + nu, nu);
  sys.D12.bottomRows(nu) = sqrt_psd(w.G);
}

/// Block-diagonal skew matrix with [[0, 1], [-1, 0]] per channel pair.
inline Matrix canonical_skew(Eigen::Index dim) {
  Matrix j = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k + 1 < dim; k += 2) {
    j(k, k + 1) = 1.0;
    j(k + 1, k) = -1.0;
  }
  return j;
}

struct Controller {
  Matrix A_K, B_K, C_K;
  Vector x_K0;

  Eigen::Index order() const { return A_K.rows(); }

  void validate() const {
    detail::expect_shape(A_K, "A_K", A_K.rows(), A_K.rows(), "square A_K");
    detail::expect_shape(B_K, "B_K", A_K.rows(), B_K.cols(), "A_K");
    detail::expect_shape(C_K, "C_K", C_K.rows(), A_K.rows(), "A_K");
    if (x_K0.size() != A_K.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "x_K0 length does not match A_K");
    }
  }
};

/// An uncertainty matrix. Admissible ones satisfy sigma_max(Delta) <= 1;
/// diagnostic ones may exceed it and carry no guarantee.
class Uncertainty {
 public:
  static constexpr double kTolerance = 1e-12;

  static Uncertainty admissible(Matrix delta) {
    const double s = largest_singular_value(delta);
    if (s > 1.0 + kTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "uncertainty has sigma_max = " + std::to_string(s) + " > 1");
    }
    return Uncertainty(std::move(delta), true);
  }

  static Uncertainty diagnostic(Matrix delta) {
    const bool ok = largest_singular_value(delta) <= 1.0 + kTolerance;
    return Uncertainty(std::move(delta), ok);
  }

  static Uncertainty zero(const UncertainSystem& sys) {
    return Uncertainty(Matrix::Zero(sys.delta_rows(), sys.delta_cols()), true);
  }

  const Matrix& delta() const { return delta_; }
  bool is_admissible() const { return admissible_; }
  double sigma_max() const { return largest_singular_value(delta_); }

 private:
  Uncertainty(Matrix d, bool ok) : delta_(std::move(d)), admissible_(ok) {}
  Matrix delta_;
  bool admissible_;
};

struct ClosedLoop {
  Matrix A_tilde, B_tilde, C_tilde;
  Vector eta0_mean;
  Matrix P0;  // diag(Y0, 0): covariance of the initial closed-loop state

  Eigen::Index dim() const { return A_tilde.rows(); }
};

inline ClosedLoop assemble_closed_loop(const UncertainSystem& sys, const Controller& ctrl,
                                       const Uncertainty& unc) {
  const Matrix& d = unc.delta();
  detail::expect_shape(d, "Delta", sys.delta_rows(), sys.delta_cols(), "B0 * Delta * C0");
  detail::expect_shape(ctrl.B_K, "B_K", ctrl.order(), sys.ny(), "controller input dy");
  detail::expect_shape(ctrl.C_K, "C_K", sys.nu(), ctrl.order(), "plant input u");
  ctrl.validate();

  const auto n = sys.n();
  const auto nk = ctrl.order();
  ClosedLoop cl;
  cl.A_tilde.resize(n + nk, n + nk);
  cl.A_tilde.topLeftCorner(n, n) = sys.A + sys.B0 * d * sys.C0;
  cl.A_tilde.topRightCorner(n, nk) = (sys.B1 + sys.B0 * d * sys.D0) * ctrl.C_K;
  cl.A_tilde.bottomLeftCorner(nk, n) = ctrl.B_K * (sys.C2 + sys.D20 * d * sys.C0);
  cl.A_tilde.bottomRightCorner(nk, nk) = ctrl.A_K + ctrl.B_K * (sys.D22 + sys.D20 * d * sys.D0) * ctrl.C_K;

  cl.B_tilde.resize(n + nk, sys.nv());
  cl.B_tilde.topRows(n) = sys.B0;
  cl.B_tilde.bottomRows(nk) = ctrl.B_K * sys.D20;

  cl.C_tilde.resize(sys.nmu(), n + nk);
  cl.C_tilde.leftCols(n) = sys.C1;
  cl.C_tilde.rightCols(nk) = sys.D12 * ctrl.C_K;

  cl.eta0_mean.resize(n + nk);
  cl.eta0_mean.head(n) = sys.x0_mean;
  cl.eta0_mean.tail(nk) = ctrl.x_K0;

  cl.P0 = Matrix::Zero(n + nk, n + nk);
  cl.P0.topLeftCorner(n, n) = sys.x0_cov;
  return cl;
}

/// Effective diffusion weight of the noise: the symmetric part of
/// F_v = I + i J_v, which is always the identity.
inline Matrix noise_covariance(const UncertainSystem& sys) {
  return Matrix::Identity(sys.nv(), sys.nv());
}

enum class SamplingStrategy { Zero, Vertex, RandomBall };

inline std::string_view to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::Zero: return "zero";
    case SamplingStrategy::Vertex: return "vertex";
    case SamplingStrategy::RandomBall: return "random-ball";
  }
  return "unknown";
}

/// Haar-distributed orthogonal matrix from QR of a Gaussian matrix, with
/// the sign of R's diagonal folded into Q.
inline Matrix random_orthogonal(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g = Matrix::NullaryExpr(dim, dim, [&] { return normal(rng); });
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    if (r(k, k) < 0) q.col(k) *= -1.0;
  }
  return q;
}

/// Delta = U diag(sigma) V^T with U, V random orthogonal; sigma is all ones
/// for Vertex and i.i.d. uniform [0, 1] for RandomBall.
inline Uncertainty sample_uncertainty(const UncertainSystem& sys, SamplingStrategy strategy,
                                      std::uint64_t seed) {
  const auto rows = sys.delta_rows();
  const auto cols = sys.delta_cols();
  if (strategy == SamplingStrategy::Zero || rows == 0 || cols == 0) return Uncertainty::zero(sys);

  std::mt19937_64 rng(seed);
  const Matrix u = random_orthogonal(rows, rng);
  const Matrix v = random_orthogonal(cols, rng);
  const auto k = std::min(rows, cols);
  Vector sigma = Vector::Ones(k);
  if (strategy == SamplingStrategy::RandomBall) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < k; ++i) sigma(i) = unif(rng);
  }
  Matrix d = u.leftCols(k) * sigma.asDiagonal() * v.leftCols(k).transpose();
  // Rounding can leave sigma_max a few ulps above one.
  const double s = largest_singular_value(d);
  if (s > 1.0) d /= s;
  return Uncertainty::admissible(std::move(d));
}

}  // namespace qgc
