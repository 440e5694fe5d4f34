#pragma once

// Independent checks of a synthesized controller: exact closed-loop second
// moments from the Lyapunov differential equation, the resulting quadratic
// cost, a Monte Carlo estimate of the same cost from the equivalent
// classical SDE, and a sweep over admissible uncertainty samples.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qgc/model.hpp"
#include "qgc/parallel.hpp"

namespace qgc {

struct MomentTrajectory {
  OdeTrajectory trajectory;          // P(t) = E[eta eta^T]
  std::vector<double> cost_integral; // running int_0^t Tr(C~^T C~ P) ds
};

/// Integrates P' = A~ P + P A~^T + B~ B~^T. The initial second moment is
/// P0 + eta0 eta0^T, which is P0 itself for a zero-mean initial state.
inline MomentTrajectory propagate_moments(const ClosedLoop& cl, double horizon, int steps = 10000) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "propagate_moments: steps must be >= 1");
  const Matrix bb = cl.B_tilde * cl.B_tilde.transpose();
  const Matrix w = cl.C_tilde.transpose() * cl.C_tilde;
  const Matrix init = cl.P0 + cl.eta0_mean * cl.eta0_mean.transpose();
  MomentTrajectory mt;
  if (horizon > 0.0) {
    const MatrixRhs rhs = [&](double, const Matrix& p) -> Matrix {
      return cl.A_tilde * p + p * cl.A_tilde.transpose() + bb;
    };
    mt.trajectory = integrate_matrix_ode(rhs, init, 0.0, horizon, steps);
  } else {
    mt.trajectory.grid = {0.0};
    mt.trajectory.values = {symmetrize(init)};
  }
  const auto& g = mt.trajectory.grid;
  mt.cost_integral.assign(g.size(), 0.0);
  double prev = (w * mt.trajectory.values[0]).trace();
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double cur = (w * mt.trajectory.values[i]).trace();
    mt.cost_integral[i] = mt.cost_integral[i - 1] + 0.5 * (g[i] - g[i - 1]) * (prev + cur);
    prev = cur;
  }
  return mt;
}

/// J = int_0^tf Tr(C~^T C~ P(t)) dt by composite trapezoid over the grid.
inline double cost_from_moments(const ClosedLoop& cl, const MomentTrajectory& mt) {
  const Matrix w = cl.C_tilde.transpose() * cl.C_tilde;
  const double j = trapezoid(mt.trajectory.grid, [&](std::size_t i) { return (w * mt.trajectory.values[i]).trace(); });
  return std::max(0.0, j);
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int paths = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Reproducible per-item stream seed derived from a base seed and an index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return detail::splitmix64(detail::splitmix64(seed) ^ (index + 1));
}

/// Euler-Maruyama simulation of d zeta = A~ zeta dt + B~ dv with unit
/// intensity Wiener noise, zeta(0) ~ N(eta0, P0). Each path accumulates
/// int |C~ zeta|^2 dt with left-endpoint quadrature. Path i draws from its
/// own stream derived from (seed, i), so results do not depend on the
/// number of workers.
inline McEstimate monte_carlo_cost(const ClosedLoop& cl, double horizon, int paths, double dt, std::uint64_t seed,
                                   unsigned workers = 0) {
  if (paths < 2) throw Error(ErrorCode::InvalidArgument, "monte_carlo_cost: need at least 2 paths");
  if (!(dt > 0.0) || dt > horizon) throw Error(ErrorCode::InvalidArgument, "monte_carlo_cost: need 0 < dt <= horizon");
  const int steps = std::max(1, static_cast<int>(std::lround(horizon / dt)));
  const double h = horizon / steps;
  const double sqrt_h = std::sqrt(h);
  const Eigen::Index dim = cl.dim();
  const Eigen::Index nv = cl.B_tilde.cols();
  const Matrix step_map = Matrix::Identity(dim, dim) + h * cl.A_tilde;
  const Matrix noise_map = sqrt_h * cl.B_tilde;
  const Matrix init_factor = sqrt_psd(cl.P0);

  std::vector<double> per_path(static_cast<std::size_t>(paths));
  parallel_for(
      per_path.size(),
      [&](std::size_t p) {
        std::mt19937_64 rng(derive_seed(seed, p));
        std::normal_distribution<double> normal;
        Vector xi(std::max(dim, nv));
        for (Eigen::Index k = 0; k < dim; ++k) xi(k) = normal(rng);
        Vector z = cl.eta0_mean + init_factor * xi.head(dim);
        Vector next(dim);
        Vector mu(cl.C_tilde.rows());
        Vector dv(nv);
        double acc = 0.0;
        for (int s = 0; s < steps; ++s) {
          mu.noalias() = cl.C_tilde * z;
          acc += mu.squaredNorm() * h;
          for (Eigen::Index k = 0; k < nv; ++k) dv(k) = normal(rng);
          next.noalias() = step_map * z;
          next.noalias() += noise_map * dv;
          z.swap(next);
        }
        per_path[p] = acc;
      },
      workers);

  McEstimate est;
  est.paths = paths;
  double sum = 0.0;
  for (double v : per_path) sum += v;
  est.mean = sum / paths;
  double ss = 0.0;
  for (double v : per_path) ss += (v - est.mean) * (v - est.mean);
  est.std_error = std::sqrt(ss / (paths - 1) / paths);
  return est;
}

// ---------------------------------------------------------------------------
// Bound sweep over uncertainty samples.

struct SampleRecord {
  int delta_id = 0;
  SamplingStrategy strategy = SamplingStrategy::Zero;
  bool diagnostic = false;
  std::uint64_t seed = 0;
  double sigma_max = 0.0;
  bool admissible = true;
  bool stable = true;
  double J_dre = 0.0;
  std::optional<McEstimate> J_mc;
  double bound = 0.0;
  double margin = 0.0;
  bool pass = false;
  bool within_integral_bound = false;  // J_dre <= 2 V_tau (1 + 1e-6)
  Matrix delta;
};

struct VerificationReport {
  std::vector<SampleRecord> samples;
  double bound = 0.0;
  double horizon = 0.0;
  double max_J_dre = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  bool all_pass = true;
  bool all_within_integral_bound = true;
};

struct SweepOptions {
  int steps = 10000;
  int mc_paths = 0;   // 0 disables Monte Carlo spot checks
  double mc_dt = 1e-3;
  double mc_horizon = 0.0;  // 0 uses the sweep horizon
  unsigned workers = 0;
  std::vector<Matrix> diagnostic_deltas;  // appended as flagged samples
};

inline constexpr double kBoundRelTol = 1e-6;

/// Samples Delta (index 0 is zero, then vertex samples for the first half,
/// random-ball for the rest), computes J_dre for each closed loop and
/// compares it with V_tau.
inline VerificationReport sweep_bound(const UncertainSystem& sys, const Controller& ctrl, double bound,
                                      double horizon, int n_samples, std::uint64_t seed,
                                      const SweepOptions& opts = {}) {
  if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "sweep_bound: need at least one sample");
  const int n_vertex = n_samples / 2;  // at least n_samples / 4
  struct Plan {
    SamplingStrategy strategy;
    std::uint64_t seed;
    bool diagnostic;
    Matrix delta;
  };
  std::vector<Plan> plan;
  for (int i = 0; i < n_samples; ++i) {
    const auto strat = i == 0 ? SamplingStrategy::Zero
                              : (i <= n_vertex ? SamplingStrategy::Vertex : SamplingStrategy::RandomBall);
    const auto s = derive_seed(seed, static_cast<std::uint64_t>(i));
    plan.push_back({strat, s, false, sample_uncertainty(sys, strat, s).delta()});
  }
  for (const auto& d : opts.diagnostic_deltas) plan.push_back({SamplingStrategy::Zero, 0, true, d});

  VerificationReport rep;
  rep.bound = bound;
  rep.horizon = horizon;
  rep.samples.resize(plan.size());
  parallel_for(
      plan.size(),
      [&](std::size_t i) {
        const auto& pl = plan[i];
        SampleRecord r;
        r.delta_id = static_cast<int>(i);
        r.strategy = pl.strategy;
        r.diagnostic = pl.diagnostic;
        r.seed = pl.seed;
        r.delta = pl.delta;
        const auto unc = Uncertainty::diagnostic(pl.delta);
        r.sigma_max = unc.sigma_max();
        r.admissible = unc.is_admissible();
        r.bound = bound;
        const ClosedLoop cl = assemble_closed_loop(sys, ctrl, unc);
        r.stable = is_hurwitz(cl.A_tilde);
        try {
          r.J_dre = cost_from_moments(cl, propagate_moments(cl, horizon, opts.steps));
        } catch (const Error&) {
          r.J_dre = std::numeric_limits<double>::infinity();
        }
        if (opts.mc_paths >= 2) {
          const double mh = opts.mc_horizon > 0.0 ? opts.mc_horizon : horizon;
          r.J_mc = monte_carlo_cost(cl, mh, opts.mc_paths, opts.mc_dt, derive_seed(pl.seed, 0xC0FFEE), 1);
        }
        r.margin = bound - r.J_dre;
        r.pass = r.J_dre <= bound * (1.0 + kBoundRelTol);
        r.within_integral_bound = r.J_dre <= 2.0 * bound * (1.0 + kBoundRelTol);
        rep.samples[i] = std::move(r);
      },
      opts.workers);

  for (const auto& r : rep.samples) {
    if (!r.admissible) continue;
    rep.max_J_dre = std::max(rep.max_J_dre, r.J_dre);
    rep.min_margin = std::min(rep.min_margin, r.margin);
    rep.all_pass = rep.all_pass && r.pass;
    rep.all_within_integral_bound = rep.all_within_integral_bound && r.within_integral_bound;
  }
  return rep;
}

}  // namespace qgc
