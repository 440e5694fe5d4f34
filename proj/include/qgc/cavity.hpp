#pragma once

// Optical cavity coupled to three field channels (w: measured, v: loss,
// u: control), written in real quadrature form with a = (x1 + i x2) / 2.

#include <cmath>
#include <string>
#include <string_view>

#include "qgc/hamiltonian.hpp"

namespace qgc {

enum class CavityUncertainty { Kappa2Perturbation, Detuning };

inline std::string_view to_string(CavityUncertainty u) {
  return u == CavityUncertainty::Kappa2Perturbation ? "kappa2" : "detuning";
}

struct CavitySpec {
  double kappa1 = 2.0;
  double kappa2 = 2.0;
  double kappa3 = 2.0;
  double delta0 = 1.0;    // bound on the kappa2 perturbation
  double Omega0 = 0.0;    // nominal detuning
  double epsilon0 = 0.0;  // bound on the detuning perturbation
  CavityUncertainty uncertainty = CavityUncertainty::Kappa2Perturbation;

  double gamma() const { return kappa1 + kappa2 + kappa3; }

  void validate() const {
    if (!(kappa1 > 0 && kappa2 > 0 && kappa3 > 0)) {
      throw Error(ErrorCode::InvalidSpec, "cavity decay rates must be positive");
    }
    if (delta0 < 0 || delta0 > 2.0 * std::sqrt(1.0 + kappa2)) {
      throw Error(ErrorCode::InvalidSpec, "delta0 must lie in [0, 2 sqrt(1 + kappa2)]");
    }
    if (epsilon0 < 0) throw Error(ErrorCode::InvalidSpec, "epsilon0 must be nonnegative");
  }

  static CavitySpec kappa2_example() { return {}; }

  static CavitySpec detuning_example() {
    CavitySpec s;
    s.delta0 = 0.0;
    s.Omega0 = 0.0;
    s.epsilon0 = 1.0;
    s.uncertainty = CavityUncertainty::Detuning;
    return s;
  }
};

/// B0(delta) = -[sqrt(kappa1) I, sqrt(kappa2 + delta) I].
inline Matrix cavity_noise_input(const CavitySpec& spec, double delta) {
  Matrix b0(2, 4);
  b0 << -std::sqrt(spec.kappa1) * Matrix::Identity(2, 2), -std::sqrt(spec.kappa2 + delta) * Matrix::Identity(2, 2);
  return b0;
}

inline Matrix cavity_drift(const CavitySpec& spec, double detuning) {
  Matrix a(2, 2);
  a << -spec.gamma() / 2.0, -detuning, detuning, -spec.gamma() / 2.0;
  return a;
}

inline CostWeights cavity_weights() { return {Matrix::Identity(2, 2), Matrix::Identity(2, 2)}; }

/// Uncertain cavity model with inflated noise B0(delta0) (kappa2 type) or the
/// detuning uncertainty channel C0 = epsilon0 / sqrt(kappa2) I. Homodyne
/// measurement of the first quadrature of the w channel; cost weights R = G = I.
inline UncertainSystem make_cavity_system(const CavitySpec& spec) {
  spec.validate();
  UncertainSystem sys;
  sys.A = cavity_drift(spec, spec.Omega0);
  sys.B0 = cavity_noise_input(spec, spec.delta0);
  sys.B1 = -std::sqrt(spec.kappa3) * Matrix::Identity(2, 2);
  sys.C2 = Matrix(1, 2);
  sys.C2 << std::sqrt(spec.kappa1), 0.0;
  sys.D20 = Matrix(1, 4);
  sys.D20 << 1.0, 0.0, 0.0, 0.0;
  sys.D22 = Matrix::Zero(1, 2);
  sys.C0 = spec.uncertainty == CavityUncertainty::Kappa2Perturbation
               ? Matrix(Matrix::Identity(2, 2))
               : Matrix(spec.epsilon0 / std::sqrt(spec.kappa2) * Matrix::Identity(2, 2));
  sys.D0 = Matrix::Zero(2, 2);
  sys.x0_mean = Vector::Zero(2);
  sys.x0_cov = Matrix::Identity(2, 2);
  sys.ito_imag = canonical_skew(4);
  install_cost_weights(sys, cavity_weights());
  return sys;
}

/// Delta = (delta / 2) [0; I / sqrt(kappa2 + delta0)], for which
/// B0(delta0) Delta C0 = -(delta / 2) I with C0 = I.
inline Matrix cavity_structured_delta(const CavitySpec& spec, double delta) {
  Matrix d = Matrix::Zero(4, 2);
  d.bottomRows(2) = (delta / 2.0) / std::sqrt(spec.kappa2 + spec.delta0) * Matrix::Identity(2, 2);
  return d;
}

/// The physical cavity with kappa2 -> kappa2 + delta (no uncertainty channel,
/// un-inflated noise B0(delta)).
inline UncertainSystem cavity_physical_system(const CavitySpec& spec, double delta) {
  UncertainSystem sys = make_cavity_system(spec);
  sys.A -= (delta / 2.0) * Matrix::Identity(2, 2);
  sys.B0 = cavity_noise_input(spec, delta);
  sys.C0 = Matrix::Zero(0, 2);
  sys.D0 = Matrix::Zero(0, 2);
  return sys;
}

/// Hamiltonian description of the cavity: R0 = -(Omega0 / 2) I and coupling
/// rows [sqrt(kappa_i), i sqrt(kappa_i)] for the channels (w, v, u).
inline HamiltonianModel cavity_hamiltonian(const CavitySpec& spec, double coupling_scale = 1.0) {
  HamiltonianModel hm;
  hm.R0 = (0.0 - spec.Omega0 / 2.0) * Matrix::Identity(2, 2);
  hm.Theta = canonical_skew(2);
  hm.Lambda.resize(3, 2);
  const double ks[3] = {spec.kappa1, spec.kappa2, spec.kappa3};
  for (int r = 0; r < 3; ++r) {
    const double s = coupling_scale * std::sqrt(ks[r]);
    hm.Lambda(r, 0) = Complex(s, 0.0);
    hm.Lambda(r, 1) = Complex(0.0, s);
  }
  hm.n_w = 6;
  hm.n_y = 2;
  hm.n_u = 2;
  return hm;
}

/// Measures the coupling normalization that makes the general Hamiltonian
/// drift formula reproduce the quadrature-form drift -(gamma / 2) I. The
/// drift is quadratic in Lambda, so the coupling scale is the square root of
/// the least-squares drift scale.
struct CavityCalibration {
  ConventionCalibration drift;
  double coupling_scale = 1.0;
};

inline CavityCalibration calibrate_cavity(const CavitySpec& spec) {
  CavitySpec undetuned = spec;
  undetuned.Omega0 = 0.0;
  const HamiltonianModel hm = cavity_hamiltonian(undetuned, 1.0);
  CavityCalibration c;
  c.drift = calibrate_convention(drift_from_hamiltonian(hm, hm.R0), cavity_drift(undetuned, 0.0));
  c.coupling_scale = std::sqrt(std::max(c.drift.scale, 0.0));
  return c;
}

inline HamiltonianUncertainty cavity_detuning_uncertainty(const CavitySpec& spec) {
  HamiltonianUncertainty hu;
  hu.C0 = spec.epsilon0 / std::sqrt(spec.kappa2) * Matrix::Identity(2, 2);
  hu.delta_tilde_rows = 2;
  return hu;
}

/// Delta_tilde for a detuning error Omega_e with |Omega_e| <= epsilon0.
inline Matrix detuning_delta_tilde(double omega_e, double epsilon0) {
  Matrix d(2, 2);
  d << 0.0, -omega_e / epsilon0, omega_e / epsilon0, 0.0;
  return d;
}

}  // namespace qgc
