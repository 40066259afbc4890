#pragma once

#include <cmath>
#include <complex>
#include <optional>

#include "mwaddr/errors.hpp"
#include "mwaddr/units.hpp"

// Exact two-level dynamics.  Basis ordering is (down, up) with
// sigma_z = diag(+1, -1), i.e. sigma_z|down> = +|down>.  The rotating
// frame Hamiltonian for a pulse is
//   H/hbar = (Omega/2)(cos(phi) sigma_x + sin(phi) sigma_y) + (Delta/2) sigma_z
// and the closed-form propagator over duration t is
//   U = cos(Wt/2) 1 - i sin(Wt/2) (n . sigma),  W = sqrt(Omega^2 + Delta^2).

namespace mwaddr::spin {

struct QubitState {
  std::complex<double> amplitude_down{1.0, 0.0};
  std::complex<double> amplitude_up{0.0, 0.0};

  double p_down() const { return std::norm(amplitude_down); }
  double p_up() const { return std::norm(amplitude_up); }
  double norm() const { return p_down() + p_up(); }

  static QubitState down() { return {}; }
  static QubitState up() { return {{0.0, 0.0}, {1.0, 0.0}}; }
};

struct PulseParams {
  double rabi_rate = 0;   // rad/s, >= 0
  double drive_phase = 0; // rad
  double detuning = 0;    // rad/s
  double duration = 0;    // s, >= 0

  void validate() const {
    if (rabi_rate < 0) throw PreconditionViolated("rabi_rate must be >= 0");
    if (duration < 0) throw PreconditionViolated("duration must be >= 0");
  }
};

inline QubitState evolve(const QubitState& state, const PulseParams& p) {
  p.validate();
  const double w = std::hypot(p.rabi_rate, p.detuning);
  if (w == 0 || p.duration == 0) return state;

  const double half = 0.5 * w * p.duration;
  const double c = std::cos(half);
  const double s = std::sin(half);
  const double nx = p.rabi_rate * std::cos(p.drive_phase) / w;
  const double ny = p.rabi_rate * std::sin(p.drive_phase) / w;
  const double nz = p.detuning / w;
  const std::complex<double> i(0, 1);

  // U = [[c - i s nz, -i s (nx - i ny)], [-i s (nx + i ny), c + i s nz]]
  const std::complex<double> u00 = c - i * s * nz;
  const std::complex<double> u01 = -i * s * std::complex<double>(nx, -ny);
  const std::complex<double> u10 = -i * s * std::complex<double>(nx, ny);
  const std::complex<double> u11 = c + i * s * nz;

  return QubitState{u00 * state.amplitude_down + u01 * state.amplitude_up,
                    u10 * state.amplitude_down + u11 * state.amplitude_up};
}

// Off-resonant spin-flip probability of a square pulse (Rabi formula).
inline double flip_probability(double rabi_rate, double detuning, double t) {
  const double w2 = rabi_rate * rabi_rate + detuning * detuning;
  if (w2 == 0) return 0.0;
  const double s = std::sin(0.5 * std::sqrt(w2) * t);
  return rabi_rate * rabi_rate / w2 * s * s;
}

// Spectator spin-flip probability when the addressed qubit receives a
// resonant pi pulse and the spectator sees the same resonant drive at a
// weaker Rabi rate (addressing methods based on field-amplitude contrast).
inline double crosstalk_resonant_pi(double rabi_addressed, double rabi_spectator) {
  if (rabi_addressed <= 0)
    throw PreconditionViolated("addressed Rabi rate must be positive");
  const double s = std::sin(0.5 * units::pi * rabi_spectator / rabi_addressed);
  return s * s;
}

// P(up) after pi/2 -- free precession T_R -- pi/2, all at detuning Delta,
// starting from |down>.  Optional exponential fringe-contrast decay about
// 1/2 with time constant tau.
inline double ramsey_probability(double rabi_pulse, double detuning, double t_free,
                                 std::optional<double> contrast_decay_time = {}) {
  if (rabi_pulse <= 0) throw PreconditionViolated("pulse Rabi rate must be positive");
  const PulseParams half_pi{rabi_pulse, 0.0, detuning, 0.5 * units::pi / rabi_pulse};
  const PulseParams free_evolution{0.0, 0.0, detuning, t_free};
  const QubitState mid = evolve(evolve(QubitState::down(), half_pi), free_evolution);
  const double p_up = evolve(mid, half_pi).p_up();
  if (!contrast_decay_time) return p_up;
  const double contrast = std::exp(-t_free / *contrast_decay_time);
  return 0.5 + (p_up - 0.5) * contrast;
}

// Relative phase accumulated between up and down under a sigma_z shift.
inline double acz_phase(double acz_shift, double t) { return acz_shift * t; }

// z-rotation by phi: |up> advances by exp(-i phi) relative to |down>.
inline QubitState apply_z_rotation(const QubitState& state, double phi) {
  const std::complex<double> i(0, 1);
  return QubitState{state.amplitude_down, std::exp(-i * phi) * state.amplitude_up};
}

} // namespace mwaddr::spin
