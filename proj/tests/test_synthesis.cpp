#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qgc/cavity.hpp"
#include "qgc/synthesis.hpp"

using qgc::Matrix;

namespace {

struct Scalar {
  double a = -1.0, b01 = 0.5, b02 = 0.8, b1 = 1.0, c2 = 1.0, c0 = 0.5, r = 1.0, g = 1.0;

  qgc::UncertainSystem system() const {
    qgc::UncertainSystem s;
    s.A = Matrix::Constant(1, 1, a);
    s.B0 = Matrix(1, 2);
    s.B0 << b01, b02;
    s.B1 = Matrix::Constant(1, 1, b1);
    s.C2 = Matrix::Constant(1, 1, c2);
    s.D20 = Matrix(1, 2);
    s.D20 << 1.0, 0.0;
    s.D22 = Matrix::Zero(1, 1);
    s.C0 = Matrix::Constant(1, 1, c0);
    s.D0 = Matrix::Zero(1, 1);
    s.x0_mean = Eigen::VectorXd::Zero(1);
    s.x0_cov = Matrix::Identity(1, 1);
    s.ito_imag = qgc::canonical_skew(2);
    qgc::install_cost_weights(s, weights());
    return s;
  }
  qgc::CostWeights weights() const { return {Matrix::Constant(1, 1, r), Matrix::Constant(1, 1, g)}; }
};

}  // namespace

TEST(Synthesis, ScalarClosedForm) {
  const Scalar p;
  const double tau = 2.0, tf = 10.0;
  const double r_tau = p.r + tau * p.c0 * p.c0;
  const double y = oracle::scalar_are(p.a - p.b01 * p.c2, p.c2 * p.c2 - r_tau / tau, p.b02 * p.b02);
  const double x = oracle::scalar_are(p.a, p.b1 * p.b1 / p.g - (p.b01 * p.b01 + p.b02 * p.b02) / tau, r_tau);
  const double m = 1.0 / (1.0 - y * x / tau);
  const double bk = y * p.c2 + p.b01;
  const double ck = -p.b1 * x / p.g * m;
  const double ak = p.a + y * r_tau / tau - bk * p.c2 + p.b1 * ck;
  const double v = 0.5 * tf * (y * r_tau + bk * bk * x * m);

  const auto rep = qgc::synthesize(p.system(), p.weights(), tau, tf);
  EXPECT_NEAR(rep.riccati.Y.front()(0, 0), y, 1e-12);
  EXPECT_NEAR(rep.riccati.X.front()(0, 0), x, 1e-12);
  EXPECT_NEAR(rep.controller.B_K(0, 0), bk, 1e-12);
  EXPECT_NEAR(rep.controller.C_K(0, 0), ck, 1e-12);
  EXPECT_NEAR(rep.controller.A_K(0, 0), ak, 1e-12);
  EXPECT_NEAR(rep.bound, v, 1e-10);
  EXPECT_NEAR(rep.integral_bound, 2.0 * v, 1e-10);
}

TEST(Synthesis, InitialMeanTerm) {
  const Scalar p;
  auto sys = p.system();
  const double tau = 2.0, tf = 5.0;
  const double v0 = qgc::synthesize(sys, p.weights(), tau, tf).bound;
  sys.x0_mean(0) = 1.5;
  const auto rep = qgc::synthesize(sys, p.weights(), tau, tf);
  const double x = rep.riccati.X.front()(0, 0);
  const double expect = 0.5 * 1.5 * 1.5 * x / (1.0 - sys.x0_cov(0, 0) * x / tau);
  EXPECT_NEAR(rep.bound - v0, expect, 1e-10);
  EXPECT_NEAR(rep.controller.x_K0(0), 1.5, 0.0);
}

TEST(Synthesis, SteadyStateResiduals) {
  const auto spec = qgc::CavitySpec::kappa2_example();
  const auto sys = qgc::make_cavity_system(spec);
  const auto w = qgc::cavity_weights();
  const double tau = 1.41;
  const auto tn = qgc::tau_notation(sys, w, tau);
  const auto f = qgc::detail::filter_data(sys, tn);
  const auto c = qgc::detail::control_data(sys, tn);
  const auto pair = qgc::solve_riccati_pair(sys, w, tau, 100.0);
  ASSERT_TRUE(pair.feasible);
  const Matrix& y = pair.Y.front();
  const Matrix& x = pair.X.front();
  EXPECT_LT((f.A_bar * y + y * f.A_bar.transpose() - y * f.S * y + f.Q).norm(), 1e-10);
  EXPECT_LT((x * c.A_x + c.A_x.transpose() * x - x * c.S * x + c.Q).norm(), 1e-10);
  EXPECT_LT((y - oracle::are(f.A_bar.transpose(), f.S, f.Q)).norm(), 1e-8);
  EXPECT_LT((x - oracle::are(c.A_x, c.S, c.Q)).norm(), 1e-8);
}

TEST(Synthesis, FiniteHorizonBoundaryConditionsAndSteadyLimit) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto w = qgc::cavity_weights();
  qgc::RiccatiOptions opts;
  opts.mode = qgc::RiccatiMode::FiniteHorizon;
  opts.steps = 8000;
  const auto fin = qgc::solve_riccati_pair(sys, w, 1.41, 40.0, opts);
  ASSERT_TRUE(fin.feasible) << fin.failure;
  EXPECT_LT((fin.Y.front() - sys.x0_cov).norm(), 1e-15);
  EXPECT_LT(fin.X.back().norm(), 1e-15);
  const auto ss = qgc::solve_riccati_pair(sys, w, 1.41, 40.0);
  const auto mid = qgc::frozen_sample(fin);
  EXPECT_NEAR(fin.Y.grid[mid], 20.0, 1e-9);
  EXPECT_LT((fin.Y.values[mid] - ss.Y.front()).norm(), 1e-8);
  EXPECT_LT((fin.X.values[mid] - ss.X.front()).norm(), 1e-8);
  const auto sched = qgc::gain_schedule(sys, w, 1.41, fin);
  EXPECT_EQ(sched.size(), fin.Y.size());
}

TEST(Synthesis, DefaultModeFollowsHorizon) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  EXPECT_EQ(qgc::default_mode(sys, 100.0), qgc::RiccatiMode::SteadyState);
  EXPECT_EQ(qgc::default_mode(sys, 1.0), qgc::RiccatiMode::FiniteHorizon);
}

TEST(Synthesis, TinyTauInfeasible) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  try {
    qgc::synthesize(sys, qgc::cavity_weights(), 0.01, 100.0);
    FAIL() << "expected NoFeasibleTau";
  } catch (const qgc::Error& e) {
    EXPECT_EQ(e.code(), qgc::ErrorCode::NoFeasibleTau);
  }
  const auto ev = qgc::evaluate_tau(sys, qgc::cavity_weights(), 0.01, 100.0, {});
  EXPECT_FALSE(ev.feasible);
  EXPECT_NE(ev.failing_item, qgc::FeasibilityItem::None);
}

TEST(Synthesis, CouplingCondition) {
  const Matrix two = 2.0 * Matrix::Identity(2, 2);
  EXPECT_FALSE(qgc::check_coupling(two, two, 3.0).pass);
  EXPECT_TRUE(qgc::check_coupling(two, two, 4.5).pass);
  EXPECT_NEAR(qgc::check_coupling(two, two, 3.0).rho_max, 4.0, 1e-12);
}

TEST(Synthesis, CostFactorizationEnforced) {
  auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  sys.D20.setZero();
  const auto v = qgc::check_assumption1(sys, qgc::cavity_weights());
  EXPECT_FALSE(v.pass);
  try {
    qgc::synthesize(sys, qgc::cavity_weights(), 1.41, 100.0);
    FAIL() << "expected InvalidSpec";
  } catch (const qgc::Error& e) {
    EXPECT_EQ(e.code(), qgc::ErrorCode::InvalidSpec);
  }
}

TEST(Synthesis, TauSearchInteriorMinimum) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  qgc::TauSearchOptions so;
  const auto rep = qgc::minimize_tau(sys, qgc::cavity_weights(), 100.0, so);
  EXPECT_FALSE(rep.boundary_hit);
  EXPECT_EQ(rep.evaluations.size(), 64u);
  double grid_best = INFINITY;
  for (const auto& e : rep.evaluations)
    if (e.feasible) grid_best = std::min(grid_best, e.bound);
  EXPECT_LE(rep.bound, grid_best);
  // Bound is locally minimal in tau.
  for (double f : {0.99, 1.01}) {
    const auto ev = qgc::evaluate_tau(sys, qgc::cavity_weights(), rep.tau * f, 100.0, {});
    ASSERT_TRUE(ev.feasible);
    EXPECT_GE(ev.bound, rep.bound - 1e-9);
  }
}

TEST(Synthesis, LargeTauWithoutUncertaintyApproachesLqg) {
  auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  sys.C0.setZero();
  const auto w = qgc::cavity_weights();
  const auto rep = qgc::synthesize(sys, w, 1e4, 100.0);
  const auto ref = oracle::lqg(sys.A, sys.B0, sys.B1, sys.C2, sys.D20, sys.D22, w.R, w.G);
  EXPECT_LT((rep.controller.A_K - ref.A_K).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((rep.controller.B_K - ref.B_K).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((rep.controller.C_K - ref.C_K).cwiseAbs().maxCoeff(), 1e-3);
}
