#include <gtest/gtest.h>

#include <cmath>

#include "qgc/cavity.hpp"
#include "qgc/synthesis.hpp"
#include "qgc/verify.hpp"

using qgc::Matrix;

namespace {

// d zeta = -zeta dt + dv, cost weight 1: stationary variance 1/2.
qgc::ClosedLoop ornstein_uhlenbeck(double p0) {
  qgc::ClosedLoop cl;
  cl.A_tilde = -Matrix::Identity(1, 1);
  cl.B_tilde = Matrix::Identity(1, 1);
  cl.C_tilde = Matrix::Identity(1, 1);
  cl.eta0_mean = Eigen::VectorXd::Zero(1);
  cl.P0 = Matrix::Constant(1, 1, p0);
  return cl;
}

qgc::SynthesisReport cavity_report(const qgc::UncertainSystem& sys) {
  return qgc::minimize_tau(sys, qgc::cavity_weights(), 100.0, {});
}

}  // namespace

TEST(Moments, OrnsteinUhlenbeckClosedForm) {
  // P(t) = 1/2 + (P0 - 1/2) e^{-2t}; J = t/2 + (P0 - 1/2)(1 - e^{-2t})/2.
  const double p0 = 2.0, tf = 3.0;
  const auto cl = ornstein_uhlenbeck(p0);
  const auto mt = qgc::propagate_moments(cl, tf, 3000);
  EXPECT_NEAR(mt.trajectory.back()(0, 0), 0.5 + (p0 - 0.5) * std::exp(-2 * tf), 1e-12);
  const double j = tf / 2 + (p0 - 0.5) * (1 - std::exp(-2 * tf)) / 2;
  EXPECT_NEAR(qgc::cost_from_moments(cl, mt), j, 1e-6);
  EXPECT_NEAR(mt.cost_integral.back(), qgc::cost_from_moments(cl, mt), 1e-12);
}

TEST(Moments, InitialMeanEntersSecondMoment) {
  auto cl = ornstein_uhlenbeck(0.0);
  cl.eta0_mean(0) = 2.0;
  const auto mt = qgc::propagate_moments(cl, 0.0);
  EXPECT_NEAR(mt.trajectory.front()(0, 0), 4.0, 0.0);
}

TEST(MonteCarlo, StationaryOrnsteinUhlenbeckRate) {
  const double tf = 20.0;
  const auto est = qgc::monte_carlo_cost(ornstein_uhlenbeck(0.5), tf, 2000, 1e-2, 123);
  EXPECT_NEAR(est.mean / tf, 0.5, 4.0 * est.std_error / tf + 0.01);
  EXPECT_GT(est.std_error, 0.0);
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
  const auto cl = ornstein_uhlenbeck(1.0);
  const auto a = qgc::monte_carlo_cost(cl, 1.0, 64, 1e-2, 99, 1);
  const auto b = qgc::monte_carlo_cost(cl, 1.0, 64, 1e-2, 99, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
  const auto c = qgc::monte_carlo_cost(cl, 1.0, 64, 1e-2, 100, 1);
  EXPECT_NE(a.mean, c.mean);
}

TEST(MonteCarlo, RejectsBadArguments) {
  const auto cl = ornstein_uhlenbeck(1.0);
  EXPECT_THROW(qgc::monte_carlo_cost(cl, 1.0, 1, 1e-2, 0), qgc::Error);
  EXPECT_THROW(qgc::monte_carlo_cost(cl, 1.0, 10, 0.0, 0), qgc::Error);
}

TEST(Sweep, SampleLayout) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto rep = cavity_report(sys);
  const auto v = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 50, 1);
  ASSERT_EQ(v.samples.size(), 50u);
  EXPECT_EQ(v.samples[0].strategy, qgc::SamplingStrategy::Zero);
  EXPECT_EQ(v.samples[0].delta.norm(), 0.0);
  int vertex = 0;
  for (const auto& s : v.samples) {
    EXPECT_TRUE(s.admissible);
    EXPECT_TRUE(s.stable);
    vertex += s.strategy == qgc::SamplingStrategy::Vertex;
  }
  EXPECT_GE(vertex, 12);
}

TEST(Sweep, NominalCostMatchesDirectPropagation) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto rep = cavity_report(sys);
  const auto v = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 1, 1);
  const auto cl = qgc::assemble_closed_loop(sys, rep.controller, qgc::Uncertainty::zero(sys));
  EXPECT_NEAR(v.samples[0].J_dre, qgc::cost_from_moments(cl, qgc::propagate_moments(cl, 100.0)), 1e-9);
  EXPECT_TRUE(v.all_pass);
}

TEST(Sweep, IntegralBoundDominatesSampledCosts) {
  for (const auto& spec : {qgc::CavitySpec::kappa2_example(), qgc::CavitySpec::detuning_example()}) {
    const auto sys = qgc::make_cavity_system(spec);
    const auto rep = cavity_report(sys);
    const auto v = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 50, 7);
    EXPECT_TRUE(v.all_within_integral_bound) << "max J " << v.max_J_dre << " vs 2V " << 2 * rep.bound;
  }
}

TEST(Sweep, ReducedBoundIsFlagged) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto rep = cavity_report(sys);
  const auto v = qgc::sweep_bound(sys, rep.controller, 0.1 * rep.bound, 100.0, 3, 1);
  EXPECT_FALSE(v.all_pass);
  EXPECT_LT(v.min_margin, 0.0);
}

TEST(Sweep, DiagnosticSamplesExcludedFromAggregate) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto rep = cavity_report(sys);
  qgc::SweepOptions so;
  so.diagnostic_deltas.push_back(5.0 * qgc::cavity_structured_delta(qgc::CavitySpec::kappa2_example(), 1.0));
  const auto v = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 1, 1, so);
  ASSERT_EQ(v.samples.size(), 2u);
  EXPECT_TRUE(v.samples[1].diagnostic);
  EXPECT_FALSE(v.samples[1].admissible);
  EXPECT_DOUBLE_EQ(v.max_J_dre, v.samples[0].J_dre);
}

TEST(Sweep, Deterministic) {
  const auto sys = qgc::make_cavity_system(qgc::CavitySpec::kappa2_example());
  const auto rep = cavity_report(sys);
  qgc::SweepOptions one, many;
  one.workers = 1;
  many.workers = 3;
  const auto a = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 8, 5, one);
  const auto b = qgc::sweep_bound(sys, rep.controller, rep.bound, 100.0, 8, 5, many);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].J_dre, b.samples[i].J_dre);
}
