#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qgc/cavity.hpp"
#include "qgc/hamiltonian.hpp"

using qgc::CMatrix;
using qgc::Complex;
using qgc::Matrix;

TEST(Gamma, PermutationReordersOddEven) {
  const Matrix p = qgc::permutation(3);
  Eigen::VectorXd a(6);
  a << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd expect(6);
  expect << 1, 3, 5, 2, 4, 6;
  EXPECT_EQ((p * a - expect).norm(), 0.0);
  EXPECT_LT((p * p.transpose() - Matrix::Identity(6, 6)).norm(), 1e-15);
}

TEST(Gamma, HalfUnitary) {
  for (Eigen::Index nw = 1; nw <= 4; ++nw) {
    const CMatrix g = qgc::build_gamma(nw);
    const CMatrix gg = g * g.adjoint();
    EXPECT_LT((gg - 0.5 * CMatrix::Identity(2 * nw, 2 * nw)).norm(), 1e-14);
  }
}

TEST(Gamma, MapsQuadraturesToAnnihilators) {
  // Gamma (x1, x2) = ((x1 + i x2) / 2, (x1 - i x2) / 2) after reordering.
  const CMatrix g = qgc::build_gamma(1);
  Eigen::VectorXcd x(2);
  x << 3.0, 5.0;
  const Eigen::VectorXcd a = g * x;
  EXPECT_LT(std::abs(a(0) - Complex(1.5, 2.5)), 1e-15);
  EXPECT_LT(std::abs(a(1) - Complex(1.5, -2.5)), 1e-15);
}

TEST(Drift, CalibratedCavityMatchesQuadratureForm) {
  const auto spec = qgc::CavitySpec::kappa2_example();
  const auto cal = qgc::calibrate_cavity(spec);
  EXPECT_NEAR(cal.drift.scale, 0.25, 1e-14);
  EXPECT_LT(cal.drift.residual, 1e-12);
  EXPECT_NEAR(cal.coupling_scale, 0.5, 1e-14);
  const auto hm = qgc::cavity_hamiltonian(spec, cal.coupling_scale);
  const auto sys = qgc::realize_state_space(hm);
  EXPECT_LT((sys.A + 3.0 * Matrix::Identity(2, 2)).norm(), 1e-12);
  Matrix b0(2, 4);
  b0 << -std::sqrt(2.0) * Matrix::Identity(2, 2), -std::sqrt(2.0) * Matrix::Identity(2, 2);
  EXPECT_LT((sys.B0 - b0).norm(), 1e-12);
  EXPECT_LT((sys.B1 + std::sqrt(2.0) * Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT((sys.C2 - std::sqrt(2.0) * Matrix::Identity(2, 2)).norm(), 1e-12);
  Matrix d20 = Matrix::Zero(2, 4);
  d20.leftCols(2) = Matrix::Identity(2, 2);
  EXPECT_LT((sys.D20 - d20).norm(), 1e-12);
}

TEST(Drift, DetuningBlock) {
  auto spec = qgc::CavitySpec::kappa2_example();
  spec.Omega0 = 0.7;
  const auto cal = qgc::calibrate_cavity(spec);
  const auto hm = qgc::cavity_hamiltonian(spec, cal.coupling_scale);
  const Matrix a = qgc::drift_from_hamiltonian(hm, hm.R0);
  EXPECT_LT((a - qgc::cavity_drift(spec, 0.7)).norm(), 1e-12);
}

TEST(Perturbation, DetuningIdentity) {
  auto spec = qgc::CavitySpec::detuning_example();
  const auto cal = qgc::calibrate_cavity(spec);
  const auto hm = qgc::cavity_hamiltonian(spec, cal.coupling_scale);
  const auto hu = qgc::cavity_detuning_uncertainty(spec);
  const auto sys = qgc::realize_uncertain(hm, hu);
  for (double om : {-1.0, -0.3, 0.5, 1.0}) {
    const Matrix d = qgc::stack_delta(hm, qgc::detuning_delta_tilde(om, spec.epsilon0));
    const Matrix e = qgc::hamiltonian_perturbation(hm, hu.C0, d);
    const Matrix shift = qgc::drift_from_hamiltonian(hm, hm.R0 + e) - sys.A;
    EXPECT_LT((shift - sys.B0 * d * sys.C0).cwiseAbs().maxCoeff(), 1e-10);
    // The resulting drift perturbation is a rotation of rate om; its sign is
    // opposite to R0 = -(om / 2) I, which the symmetric admissible set absorbs.
    Matrix rot(2, 2);
    rot << 0.0, om, -om, 0.0;
    EXPECT_LT((shift - rot).norm(), 1e-12);
  }
}

TEST(Perturbation, RandomDeltaTildeIdentity) {
  const auto spec = qgc::CavitySpec::detuning_example();
  const auto hm = qgc::cavity_hamiltonian(spec, qgc::calibrate_cavity(spec).coupling_scale);
  const auto hu = qgc::cavity_detuning_uncertainty(spec);
  const auto sys = qgc::realize_uncertain(hm, hu);
  std::mt19937_64 rng(31);
  for (int t = 0; t < 25; ++t) {
    Matrix dt = oracle::randn(2, 2, rng);
    dt /= qgc::largest_singular_value(dt);
    const Matrix d = qgc::stack_delta(hm, dt);
    const Matrix lhs =
        qgc::drift_from_hamiltonian(hm, hm.R0 + qgc::hamiltonian_perturbation(hm, hu.C0, d)) - sys.A;
    EXPECT_LT((lhs - sys.B0 * d * sys.C0).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Perturbation, StructureMismatchDetected) {
  const auto spec = qgc::CavitySpec::detuning_example();
  const auto hm = qgc::cavity_hamiltonian(spec, 0.5);
  auto hu = qgc::cavity_detuning_uncertainty(spec);
  hu.delta_tilde_rows = 3;
  try {
    qgc::realize_uncertain(hm, hu);
    FAIL() << "expected StructureMismatch";
  } catch (const qgc::Error& e) {
    EXPECT_EQ(e.code(), qgc::ErrorCode::StructureMismatch);
  }
}

TEST(Realization, NonRealResultRejected) {
  CMatrix m(1, 1);
  m(0, 0) = Complex(1.0, 1e-6);
  EXPECT_THROW(qgc::detail::real_or_throw(m, "m"), qgc::Error);
  m(0, 0) = Complex(1.0, 1e-13);
  EXPECT_NEAR(qgc::detail::real_or_throw(m, "m")(0, 0), 1.0, 0.0);
}

TEST(Realization, ValidatesChannelCounts) {
  auto hm = qgc::cavity_hamiltonian(qgc::CavitySpec::kappa2_example(), 0.5);
  hm.n_u = 3;
  EXPECT_THROW(hm.validate(), qgc::Error);
}
