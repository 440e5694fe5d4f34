#pragma once

// Builds an UncertainSystem from physical data: a quadratic Hamiltonian
// H = x^T R0 x, a coupling operator L = Lambda x, and the commutation
// matrix Theta of the quadrature vector x.

#include <complex>
#include <cstdint>
#include <random>

#include "qgc/model.hpp"

namespace qgc {

using Complex = std::complex<double>;

struct HamiltonianModel {
  Matrix R0;       // n x n
  CMatrix Lambda;  // N_w x n
  Matrix Theta;    // n x n, skew-symmetric
  Eigen::Index n_w = 0;
  Eigen::Index n_y = 0;
  Eigen::Index n_u = 0;

  Eigen::Index n() const { return R0.rows(); }
  Eigen::Index N_w() const { return n_w / 2; }
  Eigen::Index N_y() const { return n_y / 2; }

  void validate() const {
    const auto nx = n();
    detail::expect_shape(R0, "R0", nx, nx, "square R0");
    detail::expect_shape(Theta, "Theta", nx, nx, "R0");
    if (nx % 2 != 0) throw Error(ErrorCode::InvalidArgument, "state dimension must be even");
    if ((Theta + Theta.transpose()).norm() > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "Theta is not skew-symmetric");
    }
    if (n_w <= 0 || n_w % 2 != 0 || n_y % 2 != 0 || n_u % 2 != 0 || n_u < 0 || n_y < 0) {
      throw Error(ErrorCode::InvalidArgument, "channel counts n_w, n_y, n_u must be even and n_w > 0");
    }
    if (Lambda.rows() != N_w() || Lambda.cols() != nx) {
      throw Error(ErrorCode::DimensionMismatch, "Lambda is " + std::to_string(Lambda.rows()) + "x" +
                                                    std::to_string(Lambda.cols()) + " but n_w/2 x n is " +
                                                    std::to_string(N_w()) + "x" + std::to_string(nx));
    }
    if (N_y() > N_w()) throw Error(ErrorCode::InvalidArgument, "N_y exceeds N_w");
    if (n_u + n_y > n_w) throw Error(ErrorCode::InvalidArgument, "n_u + n_y exceeds n_w");
  }
};

struct HamiltonianUncertainty {
  Matrix C0;  // n x n
  Eigen::Index delta_tilde_rows = 0;  // n_w - n_u - n_y
};

/// 2N x 2N permutation sending (a1, a2, ..., a2N) to (a1, a3, ..., a2, a4, ...).
inline Matrix permutation(Eigen::Index N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "permutation: N must be >= 1");
  Matrix p = Matrix::Zero(2 * N, 2 * N);
  for (Eigen::Index k = 0; k < N; ++k) {
    p(k, 2 * k) = 1.0;
    p(N + k, 2 * k + 1) = 1.0;
  }
  return p;
}

/// Gamma = P_{N_w} * diag_{N_w}( 1/2 [[1, i], [1, -i]] ).
inline CMatrix build_gamma(Eigen::Index N_w) {
  if (N_w < 1) throw Error(ErrorCode::InvalidArgument, "build_gamma: N_w must be >= 1");
  CMatrix blocks = CMatrix::Zero(2 * N_w, 2 * N_w);
  const Complex i(0.0, 1.0);
  for (Eigen::Index k = 0; k < N_w; ++k) {
    blocks(2 * k, 2 * k) = 0.5;
    blocks(2 * k, 2 * k + 1) = 0.5 * i;
    blocks(2 * k + 1, 2 * k) = 0.5;
    blocks(2 * k + 1, 2 * k + 1) = -0.5 * i;
  }
  return permutation(N_w).cast<Complex>() * blocks;
}

/// First n_w - n_u columns of Gamma (the noise part, excluding control channels).
inline CMatrix build_gamma0(const HamiltonianModel& hm) { return build_gamma(hm.N_w()).leftCols(hm.n_w - hm.n_u); }

namespace detail {

inline Matrix real_or_throw(const CMatrix& m, std::string_view name) {
  const double im = m.size() ? m.imag().cwiseAbs().maxCoeff() : 0.0;
  if (im > 1e-10) {
    throw Error(ErrorCode::NonRealResult,
                std::string(name) + " has imaginary residue " + std::to_string(im));
  }
  return m.real();
}

/// [-Lambda^dagger, Lambda^T], n x n_w.
inline CMatrix coupling_block(const HamiltonianModel& hm) {
  CMatrix blk(hm.n(), hm.n_w);
  blk.leftCols(hm.N_w()) = -hm.Lambda.adjoint();
  blk.rightCols(hm.N_w()) = hm.Lambda.transpose();
  return blk;
}

}  // namespace detail

/// A = 2 Theta (R + Im(Lambda^dagger Lambda)) for an arbitrary real R.
inline Matrix drift_from_hamiltonian(const HamiltonianModel& hm, const Matrix& r) {
  const CMatrix ll = hm.Lambda.adjoint() * hm.Lambda;
  return 2.0 * hm.Theta * (r + ll.imag());
}

/// Nominal (A, B0, B1, C2, D20) from the Hamiltonian parameterization. C0 and
/// D0 are empty (no uncertainty channel); C1, D12 are left empty until cost
/// weights are installed. Initial state defaults to zero mean, unit covariance.
inline UncertainSystem realize_state_space(const HamiltonianModel& hm) {
  hm.validate();
  const auto n = hm.n();
  const auto Nw = hm.N_w();
  const auto Ny = hm.N_y();
  const auto nv = hm.n_w - hm.n_u;
  const Complex i(0.0, 1.0);

  UncertainSystem sys;
  sys.A = drift_from_hamiltonian(hm, hm.R0);

  const CMatrix gamma = build_gamma(Nw);
  const CMatrix bb = 2.0 * i * hm.Theta.cast<Complex>() * detail::coupling_block(hm) * gamma;
  const Matrix b = detail::real_or_throw(bb, "[B0 B1]");
  sys.B0 = b.leftCols(nv);
  sys.B1 = b.rightCols(hm.n_u);

  if (hm.n_y > 0) {
    Matrix sigma = Matrix::Zero(Ny, Nw);
    sigma.leftCols(Ny).setIdentity();
    Matrix selector = Matrix::Zero(2 * Ny, 2 * Nw);
    selector.topLeftCorner(Ny, Nw) = sigma;
    selector.bottomRightCorner(Ny, Nw) = sigma;
    const Matrix py = permutation(Ny);

    CMatrix stacked(2 * Nw, n);
    const CMatrix lam_sharp = hm.Lambda.conjugate();
    stacked.topRows(Nw) = hm.Lambda + lam_sharp;
    stacked.bottomRows(Nw) = -i * hm.Lambda + i * lam_sharp;
    const CMatrix c2 = (py.transpose() * selector).cast<Complex>() * stacked;
    sys.C2 = detail::real_or_throw(c2, "C2");

    const Matrix d20_full = py.transpose() * selector * permutation(Nw);
    sys.D20 = d20_full.leftCols(nv);
  } else {
    sys.C2 = Matrix::Zero(0, n);
    sys.D20 = Matrix::Zero(0, nv);
  }

  sys.C0 = Matrix::Zero(0, n);
  sys.D0 = Matrix::Zero(0, hm.n_u);
  sys.C1 = Matrix::Zero(0, n);
  sys.D12 = Matrix::Zero(0, hm.n_u);
  sys.D22 = Matrix::Zero(hm.n_y, hm.n_u);
  sys.x0_mean = Vector::Zero(n);
  sys.x0_cov = Matrix::Identity(n, n);
  sys.ito_imag = canonical_skew(nv);
  return sys;
}

/// Delta = [0_{n_y x n}; Delta_tilde], the structured uncertainty acting on
/// the non-measured noise channels.
inline Matrix stack_delta(const HamiltonianModel& hm, const Matrix& delta_tilde) {
  const auto nv = hm.n_w - hm.n_u;
  if (delta_tilde.rows() != nv - hm.n_y) {
    throw Error(ErrorCode::DimensionMismatch, "Delta_tilde has " + std::to_string(delta_tilde.rows()) +
                                                  " rows, expected n_w - n_u - n_y = " +
                                                  std::to_string(nv - hm.n_y));
  }
  Matrix d = Matrix::Zero(nv, delta_tilde.cols());
  d.bottomRows(delta_tilde.rows()) = delta_tilde;
  return d;
}

/// Hamiltonian perturbation i [-Lambda^dagger, Lambda^T] Gamma0 Delta C0.
inline Matrix hamiltonian_perturbation(const HamiltonianModel& hm, const Matrix& c0, const Matrix& delta) {
  const Complex i(0.0, 1.0);
  const CMatrix e = i * detail::coupling_block(hm) * build_gamma0(hm) * delta.cast<Complex>() * c0.cast<Complex>();
  return detail::real_or_throw(e, "Hamiltonian perturbation");
}

/// Nominal realization with the uncertainty channel C0 installed (D0 = 0).
/// The perturbation identity A(R0 + E(Delta)) - A(R0) = B0 Delta C0 is
/// checked on a few seeded admissible Delta_tilde samples.
inline UncertainSystem realize_uncertain(const HamiltonianModel& hm, const HamiltonianUncertainty& hu) {
  UncertainSystem sys = realize_state_space(hm);
  const auto n = hm.n();
  detail::expect_shape(hu.C0, "C0", n, n, "Hamiltonian uncertainty");
  const auto nv = hm.n_w - hm.n_u;
  if (hu.delta_tilde_rows != nv - hm.n_y) {
    throw Error(ErrorCode::StructureMismatch,
                "delta_tilde_rows = " + std::to_string(hu.delta_tilde_rows) + " but n_w - n_u - n_y = " +
                    std::to_string(nv - hm.n_y));
  }
  sys.C0 = hu.C0;
  sys.D0 = Matrix::Zero(n, hm.n_u);

  if (hu.delta_tilde_rows > 0) {
    std::mt19937_64 rng(20080101);
    for (int trial = 0; trial < 4; ++trial) {
      const Matrix u = random_orthogonal(hu.delta_tilde_rows, rng);
      const Matrix v = random_orthogonal(n, rng);
      const auto k = std::min(hu.delta_tilde_rows, n);
      const Matrix dt = u.leftCols(k) * v.leftCols(k).transpose();
      const Matrix d = stack_delta(hm, dt);
      const Matrix lhs = drift_from_hamiltonian(hm, hm.R0 + hamiltonian_perturbation(hm, hu.C0, d)) - sys.A;
      const Matrix rhs = sys.B0 * d * sys.C0;
      if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorCode::StructureMismatch, "A(R) - A(R0) != B0 Delta C0");
      }
    }
  }
  return sys;
}

/// Least-squares scale s minimizing ||s * formula - reference||_F, used to
/// measure the normalization gap between two constructions of the same drift
/// matrix. `residual` is the remaining Frobenius mismatch.
struct ConventionCalibration {
  double scale = 1.0;
  double residual = 0.0;
};

inline ConventionCalibration calibrate_convention(const Matrix& formula, const Matrix& reference) {
  detail::expect_shape(reference, "reference", formula.rows(), formula.cols(), "formula");
  const double denom = formula.squaredNorm();
  ConventionCalibration c;
  c.scale = denom > 0 ? (formula.array() * reference.array()).sum() / denom : 1.0;
  c.residual = (c.scale * formula - reference).norm();
  return c;
}

}  // namespace qgc
