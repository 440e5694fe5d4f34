#pragma once

// Guaranteed-cost output-feedback synthesis for the uncertain system in
// model.hpp. For a multiplier tau > 0 the construction solves a filter-type
// and a control-type Riccati equation, checks the coupling condition
// rho(Y X) < tau, and forms a full-order controller together with the cost
// bound V_tau. V_tau is then minimized over tau.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qgc/model.hpp"
#include "qgc/parallel.hpp"

namespace qgc {

struct TauNotation {
  double tau = 0.0;
  Matrix R_tau;        // R + tau C0^T C0
  Matrix G_tau;        // G + tau D0^T D0
  Matrix Upsilon_tau;  // tau C0^T D0
};

inline TauNotation tau_notation(const UncertainSystem& sys, const CostWeights& w, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  TauNotation t;
  t.tau = tau;
  t.R_tau = w.R + tau * sys.C0.transpose() * sys.C0;
  t.G_tau = w.G + tau * sys.D0.transpose() * sys.D0;
  t.Upsilon_tau = tau * sys.C0.transpose() * sys.D0;
  return t;
}

// ---------------------------------------------------------------------------
// Standing structure: cost factorization and nondegenerate measurement noise.

struct Assumption1Verdict {
  bool pass = false;
  double d0 = 0.0;                // min eig of D20 D20^T
  double factor_residual = 0.0;   // max of the three factorization residuals
  std::string detail;
};

/// Checks C1^T C1 = R, D12^T D12 = G, C1^T D12 = 0 (the properties of
/// C1 = [R^{1/2}; 0], D12 = [0; G^{1/2}] that the cost depends on) and
/// D20 D20^T >= d0 I with d0 > 1e-10.
inline Assumption1Verdict check_assumption1(const UncertainSystem& sys, const CostWeights& w) {
  Assumption1Verdict v;
  if (sys.C1.rows() != sys.D12.rows() || sys.C1.cols() != sys.n() || w.R.rows() != sys.n() ||
      w.G.rows() != sys.nu() || sys.D12.cols() != sys.nu()) {
    v.detail = "C1/D12/R/G dimensions inconsistent";
    v.factor_residual = std::numeric_limits<double>::infinity();
    return v;
  }
  const double r1 = (sys.C1.transpose() * sys.C1 - w.R).norm();
  const double r2 = (sys.D12.transpose() * sys.D12 - w.G).norm();
  const double r3 = (sys.C1.transpose() * sys.D12).norm();
  v.factor_residual = std::max({r1, r2, r3});
  v.d0 = sys.ny() > 0 ? min_eig_sym(sys.D20 * sys.D20.transpose()) : 0.0;
  const bool factor_ok = v.factor_residual < 1e-10;
  const bool noise_ok = v.d0 > 1e-10;
  v.pass = factor_ok && noise_ok;
  if (!factor_ok) v.detail = "C1, D12 do not factor the weights R, G";
  if (!noise_ok) v.detail += (v.detail.empty() ? "" : "; ") + std::string("D20 D20^T is singular");
  return v;
}

// ---------------------------------------------------------------------------
// Riccati pair.

enum class RiccatiMode { SteadyState, FiniteHorizon };

inline std::string_view to_string(RiccatiMode m) {
  return m == RiccatiMode::SteadyState ? "steady" : "finite";
}

/// Steady state when the horizon covers at least 50 time constants of the
/// slowest open-loop mode, finite horizon otherwise.
inline RiccatiMode default_mode(const UncertainSystem& sys, double horizon) {
  const double rate = slowest_rate(sys.A);
  if (rate > 0.0 && horizon >= 50.0 / rate) return RiccatiMode::SteadyState;
  return RiccatiMode::FiniteHorizon;
}

/// A constant trajectory on {0, t_f}; steady-state solutions use this shape
/// so that every downstream formula treats both modes uniformly.
inline OdeTrajectory constant_trajectory(const Matrix& m, double horizon) {
  OdeTrajectory t;
  t.grid.push_back(0.0);
  t.values.push_back(m);
  if (horizon > 0.0) {
    t.grid.push_back(horizon);
    t.values.push_back(m);
  }
  return t;
}

struct RiccatiOptions {
  RiccatiMode mode = RiccatiMode::SteadyState;
  int steps = 10000;
};

namespace detail {

struct FilterData {
  Matrix A_bar, S, Q;  // A_bar Y + Y A_bar^T - Y S Y + Q
};

inline FilterData filter_data(const UncertainSystem& sys, const TauNotation& tn) {
  const Matrix gamma_inv = (sys.D20 * sys.D20.transpose()).inverse();
  FilterData f;
  f.A_bar = sys.A - sys.B0 * sys.D20.transpose() * gamma_inv * sys.C2;
  f.S = symmetrize(sys.C2.transpose() * gamma_inv * sys.C2 - tn.R_tau / tn.tau);
  const Matrix proj = Matrix::Identity(sys.nv(), sys.nv()) - sys.D20.transpose() * gamma_inv * sys.D20;
  f.Q = symmetrize(sys.B0 * proj * sys.B0.transpose());
  return f;
}

struct ControlData {
  Matrix A_x, S, Q;  // X A_x + A_x^T X - X S X + Q
};

inline ControlData control_data(const UncertainSystem& sys, const TauNotation& tn) {
  const Matrix g_inv = tn.G_tau.inverse();
  ControlData c;
  c.A_x = sys.A - sys.B1 * g_inv * tn.Upsilon_tau.transpose();
  c.S = symmetrize(sys.B1 * g_inv * sys.B1.transpose() - sys.B0 * sys.B0.transpose() / tn.tau);
  c.Q = symmetrize(tn.R_tau - tn.Upsilon_tau * g_inv * tn.Upsilon_tau.transpose());
  return c;
}

inline void require_assumption1(const UncertainSystem& sys, const CostWeights& w) {
  const auto v = check_assumption1(sys, w);
  if (!v.pass) throw Error(ErrorCode::InvalidSpec, "cost factorization check fails: " + v.detail);
}

}  // namespace detail

struct FilterRiccati {
  OdeTrajectory Y;
  double c0 = 0.0;  // min over the horizon of min eig Y(t)
};

/// Filter-type Riccati equation
///   Y' = A_bar Y + Y A_bar^T - Y (C2^T Gamma^{-1} C2 - R_tau / tau) Y
///        + B0 (I - D20^T Gamma^{-1} D20) B0^T,
/// with A_bar = A - B0 D20^T Gamma^{-1} C2, integrated forward from Y0 or
/// solved at steady state.
inline FilterRiccati solve_filter_riccati(const UncertainSystem& sys, const CostWeights& w, double tau,
                                          double horizon, const RiccatiOptions& opts = {}) {
  detail::require_assumption1(sys, w);
  const auto tn = tau_notation(sys, w, tau);
  const auto f = detail::filter_data(sys, tn);
  FilterRiccati out;
  if (opts.mode == RiccatiMode::SteadyState) {
    out.Y = constant_trajectory(solve_are_quadratic(f.A_bar.transpose(), f.S, f.Q), horizon);
  } else {
    const MatrixRhs rhs = [&](double, const Matrix& y) -> Matrix {
      return f.A_bar * y + y * f.A_bar.transpose() - y * f.S * y + f.Q;
    };
    out.Y = horizon > 0.0 ? integrate_matrix_ode(rhs, sys.x0_cov, 0.0, horizon, opts.steps)
                          : constant_trajectory(sys.x0_cov, 0.0);
  }
  out.c0 = std::numeric_limits<double>::infinity();
  for (const auto& y : out.Y.values) out.c0 = std::min(out.c0, min_eig_sym(y));
  if (!(out.c0 > 1e-10)) {
    throw Error(ErrorCode::NotPositive, "filter Riccati solution has min eigenvalue " + std::to_string(out.c0));
  }
  return out;
}

struct ControlRiccati {
  OdeTrajectory X;
  double min_eig = 0.0;
};

/// Control-type Riccati equation
///   -X' = X A_x + A_x^T X + R_tau - Upsilon G_tau^{-1} Upsilon^T
///         - X (B1 G_tau^{-1} B1^T - B0 B0^T / tau) X,   X(t_f) = 0,
/// with A_x = A - B1 G_tau^{-1} Upsilon^T.
inline ControlRiccati solve_control_riccati(const UncertainSystem& sys, const CostWeights& w, double tau,
                                            double horizon, const RiccatiOptions& opts = {}) {
  detail::require_assumption1(sys, w);
  const auto tn = tau_notation(sys, w, tau);
  const auto c = detail::control_data(sys, tn);
  ControlRiccati out;
  if (opts.mode == RiccatiMode::SteadyState) {
    out.X = constant_trajectory(solve_are_quadratic(c.A_x, c.S, c.Q), horizon);
  } else {
    const MatrixRhs rhs = [&](double, const Matrix& x) -> Matrix {
      return -(x * c.A_x + c.A_x.transpose() * x + c.Q - x * c.S * x);
    };
    const Matrix terminal = Matrix::Zero(sys.n(), sys.n());
    out.X = horizon > 0.0 ? integrate_matrix_ode(rhs, terminal, horizon, 0.0, opts.steps)
                          : constant_trajectory(terminal, 0.0);
  }
  out.min_eig = std::numeric_limits<double>::infinity();
  for (const auto& x : out.X.values) out.min_eig = std::min(out.min_eig, min_eig_sym(x));
  if (out.min_eig < -1e-10) {
    throw Error(ErrorCode::NotPSD, "control Riccati solution has min eigenvalue " + std::to_string(out.min_eig));
  }
  return out;
}

struct CouplingVerdict {
  bool pass = false;
  double rho_max = 0.0;
};

inline CouplingVerdict check_coupling(const Matrix& y, const Matrix& x, double tau) {
  CouplingVerdict v;
  v.rho_max = spectral_radius(y * x);
  v.pass = v.rho_max < tau - 1e-9;
  return v;
}

inline CouplingVerdict check_coupling(const OdeTrajectory& y, const OdeTrajectory& x, double tau) {
  if (y.size() != x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "Y and X trajectories are sampled on different grids");
  }
  CouplingVerdict v;
  for (std::size_t i = 0; i < y.size(); ++i) {
    v.rho_max = std::max(v.rho_max, spectral_radius(y.values[i] * x.values[i]));
  }
  v.pass = v.rho_max < tau - 1e-9;
  return v;
}

/// Which part of the feasibility test failed for a given tau.
enum class FeasibilityItem { None = 0, FilterRiccati = 1, ControlRiccati = 2, Coupling = 3, SingularCoupling = 4 };

inline std::string_view to_string(FeasibilityItem f) {
  switch (f) {
    case FeasibilityItem::None: return "none";
    case FeasibilityItem::FilterRiccati: return "filter-riccati";
    case FeasibilityItem::ControlRiccati: return "control-riccati";
    case FeasibilityItem::Coupling: return "coupling";
    case FeasibilityItem::SingularCoupling: return "singular-coupling";
  }
  return "unknown";
}

struct RiccatiPair {
  RiccatiMode mode = RiccatiMode::SteadyState;
  OdeTrajectory Y, X;
  bool feasible = false;
  FeasibilityItem failing_item = FeasibilityItem::None;
  std::string failure;
  double c0_margin = 0.0;
  double x_min_eig = 0.0;
  double rho_max = 0.0;
};

/// Solves both Riccati equations and the coupling test without throwing;
/// infeasibility is recorded in the result.
inline RiccatiPair solve_riccati_pair(const UncertainSystem& sys, const CostWeights& w, double tau,
                                      double horizon, const RiccatiOptions& opts = {}) {
  detail::require_assumption1(sys, w);
  RiccatiPair pair;
  pair.mode = opts.mode;
  try {
    auto f = solve_filter_riccati(sys, w, tau, horizon, opts);
    pair.Y = std::move(f.Y);
    pair.c0_margin = f.c0;
  } catch (const Error& e) {
    pair.failing_item = FeasibilityItem::FilterRiccati;
    pair.failure = e.what();
    return pair;
  }
  try {
    auto c = solve_control_riccati(sys, w, tau, horizon, opts);
    pair.X = std::move(c.X);
    pair.x_min_eig = c.min_eig;
  } catch (const Error& e) {
    pair.failing_item = FeasibilityItem::ControlRiccati;
    pair.failure = e.what();
    return pair;
  }
  const auto cv = check_coupling(pair.Y, pair.X, tau);
  pair.rho_max = cv.rho_max;
  if (!cv.pass) {
    pair.failing_item = FeasibilityItem::Coupling;
    pair.failure = "rho(YX) = " + std::to_string(cv.rho_max) + " >= tau = " + std::to_string(tau);
    return pair;
  }
  pair.feasible = true;
  return pair;
}

namespace detail {

/// (I - Y X / tau)^{-1}, rejecting numerically singular couplings.
inline Matrix coupling_inverse(const Matrix& y, const Matrix& x, double tau) {
  const Matrix m = Matrix::Identity(y.rows(), y.cols()) - y * x / tau;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    throw Error(ErrorCode::SingularCoupling, "I - YX/tau has condition number " + std::to_string(cond));
  }
  return m.inverse();
}

/// Y C2^T + B0 D20^T.
inline Matrix filter_cross(const UncertainSystem& sys, const Matrix& y) {
  return y * sys.C2.transpose() + sys.B0 * sys.D20.transpose();
}

}  // namespace detail

/// Controller gains for fixed Y and X:
///   B_K = (Y C2^T + B0 D20^T) Gamma^{-1}
///   C_K = -G_tau^{-1} (B1^T X + Upsilon^T) (I - Y X / tau)^{-1}
///   A_K = A + Y R_tau / tau - B_K C2 + (B1 + Y Upsilon / tau) C_K - B_K D22 C_K
/// with x_K0 equal to the plant's initial mean.
inline Controller build_controller(const UncertainSystem& sys, const CostWeights& w, double tau, const Matrix& y,
                                   const Matrix& x) {
  const auto tn = tau_notation(sys, w, tau);
  const Matrix gamma_inv = (sys.D20 * sys.D20.transpose()).inverse();
  const Matrix m = detail::coupling_inverse(y, x, tau);
  Controller k;
  k.B_K = detail::filter_cross(sys, y) * gamma_inv;
  k.C_K = -tn.G_tau.inverse() * (sys.B1.transpose() * x + tn.Upsilon_tau.transpose()) * m;
  k.A_K = sys.A + y * tn.R_tau / tau - k.B_K * sys.C2 + (sys.B1 + y * tn.Upsilon_tau / tau) * k.C_K -
          k.B_K * sys.D22 * k.C_K;
  k.x_K0 = sys.x0_mean;
  return k;
}

/// Controller gains at every sample of a finite-horizon Riccati pair.
inline std::vector<Controller> gain_schedule(const UncertainSystem& sys, const CostWeights& w, double tau,
                                             const RiccatiPair& pair) {
  std::vector<Controller> out;
  out.reserve(pair.Y.size());
  for (std::size_t i = 0; i < pair.Y.size(); ++i) {
    out.push_back(build_controller(sys, w, tau, pair.Y.values[i], pair.X.values[i]));
  }
  return out;
}

/// Index of the sample used for the frozen (time-invariant) controller:
/// the constant value in steady-state mode, the horizon midpoint otherwise.
inline std::size_t frozen_sample(const RiccatiPair& pair) {
  return pair.mode == RiccatiMode::SteadyState ? 0 : pair.Y.size() / 2;
}

/// The cost bound V_tau:
///   2 V_tau = x0^T X(0) (I - Y0 X(0) / tau)^{-1} x0
///           + int_0^tf Tr[ Y R_tau + B_K (Y C2^T + B0 D20^T)^T X (I - Y X / tau)^{-1} ] dt.
/// In steady-state mode the integrand is constant.
inline double cost_bound(const UncertainSystem& sys, const CostWeights& w, double tau, const RiccatiPair& pair) {
  const auto tn = tau_notation(sys, w, tau);
  const Matrix gamma_inv = (sys.D20 * sys.D20.transpose()).inverse();
  const Matrix& x_start = pair.X.front();
  const Matrix m0 = detail::coupling_inverse(sys.x0_cov, x_start, tau);
  const double initial = sys.x0_mean.dot(x_start * m0 * sys.x0_mean);

  const double integral = trapezoid(pair.Y.grid, [&](std::size_t i) {
    const Matrix& y = pair.Y.values[i];
    const Matrix& x = pair.X.values[i];
    const Matrix cross = detail::filter_cross(sys, y);
    const Matrix b_k = cross * gamma_inv;
    const Matrix m = detail::coupling_inverse(y, x, tau);
    return (y * tn.R_tau + b_k * cross.transpose() * x * m).trace();
  });
  return 0.5 * (initial + integral);
}

// ---------------------------------------------------------------------------
// Tau search.

struct TauEvaluation {
  double tau = 0.0;
  bool feasible = false;
  FeasibilityItem failing_item = FeasibilityItem::None;
  std::string failure;
  double bound = std::numeric_limits<double>::infinity();
  double rho_max = std::numeric_limits<double>::quiet_NaN();
  double y_min_eig = std::numeric_limits<double>::quiet_NaN();
};

inline TauEvaluation evaluate_tau(const UncertainSystem& sys, const CostWeights& w, double tau, double horizon,
                                  const RiccatiOptions& opts, RiccatiPair* pair_out = nullptr) {
  TauEvaluation ev;
  ev.tau = tau;
  RiccatiPair pair = solve_riccati_pair(sys, w, tau, horizon, opts);
  ev.failing_item = pair.failing_item;
  ev.failure = pair.failure;
  if (pair.failing_item != FeasibilityItem::FilterRiccati) ev.y_min_eig = pair.c0_margin;
  if (pair.failing_item == FeasibilityItem::None || pair.failing_item == FeasibilityItem::Coupling) {
    ev.rho_max = pair.rho_max;
  }
  if (pair.feasible) {
    try {
      ev.bound = cost_bound(sys, w, tau, pair);
      ev.feasible = std::isfinite(ev.bound);
    } catch (const Error& e) {
      pair.feasible = false;
      pair.failing_item = FeasibilityItem::SingularCoupling;
      pair.failure = e.what();
      ev.failing_item = pair.failing_item;
      ev.failure = pair.failure;
    }
  }
  if (pair_out) *pair_out = std::move(pair);
  return ev;
}

struct SynthesisReport {
  Controller controller;
  double tau = 0.0;
  double bound = 0.0;           // V_tau
  double integral_bound = 0.0;  // 2 V_tau
  double horizon = 0.0;
  RiccatiPair riccati;
  Assumption1Verdict assumption1;
  std::vector<TauEvaluation> evaluations;
  bool boundary_hit = false;
  std::vector<std::string> notes;
};

/// Synthesis at a fixed tau. Throws NoFeasibleTau when the Riccati pair or
/// coupling condition fails.
inline SynthesisReport synthesize(const UncertainSystem& sys, const CostWeights& w, double tau, double horizon,
                                  const RiccatiOptions& opts = {}) {
  SynthesisReport rep;
  rep.assumption1 = check_assumption1(sys, w);
  if (!rep.assumption1.pass) throw Error(ErrorCode::InvalidSpec, "cost factorization check fails: " + rep.assumption1.detail);
  RiccatiPair pair;
  const auto ev = evaluate_tau(sys, w, tau, horizon, opts, &pair);
  rep.evaluations.push_back(ev);
  if (!ev.feasible) {
    throw Error(ErrorCode::NoFeasibleTau, "tau = " + std::to_string(tau) + " infeasible (" +
                                              std::string(to_string(ev.failing_item)) + "): " + ev.failure);
  }
  const auto idx = frozen_sample(pair);
  rep.controller = build_controller(sys, w, tau, pair.Y.values[idx], pair.X.values[idx]);
  rep.tau = tau;
  rep.bound = ev.bound;
  rep.integral_bound = 2.0 * ev.bound;
  rep.horizon = horizon;
  rep.riccati = std::move(pair);
  if (sys.x0_mean.squaredNorm() > 0.0) rep.notes.push_back("nonzero initial mean contributes to the bound");
  if (opts.mode == RiccatiMode::FiniteHorizon) {
    rep.notes.push_back("finite-horizon mode: frozen controller uses Y, X at the horizon midpoint");
  }
  return rep;
}

struct TauSearchOptions {
  double tau_lo = 0.2;
  double tau_hi = 20.0;
  int grid = 64;
  double rel_width = 1e-4;
  unsigned workers = 0;
};

/// Log-spaced grid over [tau_lo, tau_hi], then golden-section refinement
/// in log(tau) around the best feasible grid point.
inline SynthesisReport minimize_tau(const UncertainSystem& sys, const CostWeights& w, double horizon,
                                    const TauSearchOptions& search, const RiccatiOptions& opts = {}) {
  if (!(search.tau_lo > 0.0 && search.tau_lo < search.tau_hi) || search.grid < 2) {
    throw Error(ErrorCode::InvalidArgument, "tau range must satisfy 0 < lo < hi with grid >= 2");
  }
  const auto a1 = check_assumption1(sys, w);
  if (!a1.pass) throw Error(ErrorCode::InvalidSpec, "cost factorization check fails: " + a1.detail);

  const auto n = static_cast<std::size_t>(search.grid);
  const double log_lo = std::log(search.tau_lo);
  const double log_hi = std::log(search.tau_hi);
  std::vector<double> taus(n);
  for (std::size_t i = 0; i < n; ++i) {
    taus[i] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  std::vector<TauEvaluation> evals(n);
  parallel_for(n, [&](std::size_t i) { evals[i] = evaluate_tau(sys, w, taus[i], horizon, opts); },
               search.workers);

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    if (evals[i].feasible && (!best || evals[i].bound < evals[*best].bound)) best = i;
  }
  if (!best) throw Error(ErrorCode::NoFeasibleTau, "no feasible tau on the grid");

  auto objective = [&](double log_tau) {
    const auto ev = evaluate_tau(sys, w, std::exp(log_tau), horizon, opts);
    return ev.feasible ? ev.bound : std::numeric_limits<double>::infinity();
  };
  double a = std::log(taus[*best > 0 ? *best - 1 : 0]);
  double b = std::log(taus[std::min(*best + 1, n - 1)]);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  // Relative width in tau of [e^a, e^b] is about b - a.
  while (b - a > search.rel_width) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = objective(d);
    }
  }
  double tau_star = std::exp(0.5 * (a + b));
  if (!(objective(std::log(tau_star)) <= evals[*best].bound)) tau_star = taus[*best];

  SynthesisReport rep = synthesize(sys, w, tau_star, horizon, opts);
  rep.evaluations = std::move(evals);
  rep.boundary_hit = (*best == 0 || *best == n - 1);
  if (rep.boundary_hit) rep.notes.push_back("minimum at the edge of the tau range");
  return rep;
}

}  // namespace qgc
