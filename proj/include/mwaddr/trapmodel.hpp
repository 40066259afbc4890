#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "mwaddr/constants.hpp"
#include "mwaddr/errors.hpp"

// Two-ion crystal geometry, lowest-order Mathieu parameter and driven
// micromotion amplitudes.  Trap frequencies are inputs; no potential
// solving happens here.

namespace mwaddr::trap {

struct TrapParameters {
  double rf_frequency = 0;     // rad/s
  double axial_frequency = 0;  // rad/s
  double radial_frequency = 0; // rad/s
  double ion_mass = 0;         // kg
  double ion_charge = constants::elementary_charge; // C

  void validate() const {
    if (!(rf_frequency > 0) || !(axial_frequency > 0) || !(radial_frequency > 0))
      throw ConfigError("trap frequencies must be positive");
    if (!(radial_frequency < 0.5 * rf_frequency))
      throw ConfigError("radial frequency must satisfy omega_radial < omega_RF/2");
    if (!(ion_mass > 0)) throw ConfigError("ion mass must be positive");
  }
};

// Equilibrium spacing of two equal ions in a harmonic axial well:
// stationary point of U(s) = m w^2 s^2 / 4 + k_e q^2 / s.
inline double two_ion_spacing(const TrapParameters& trap) {
  trap.validate();
  const double w = trap.axial_frequency;
  const double num = 2.0 * constants::coulomb_constant * trap.ion_charge * trap.ion_charge;
  return std::cbrt(num / (trap.ion_mass * w * w));
}

// Lowest-order pseudopotential relation for pure-RF radial confinement.
inline double mathieu_q(const TrapParameters& trap) {
  if (trap.radial_frequency == 0) return 0.0;
  trap.validate();
  return 2.0 * std::sqrt(2.0) * trap.radial_frequency / trap.rf_frequency;
}

inline constexpr double harmonic_validity_radius = 2e-6; // m

// Micromotion amplitude vector for a radial displacement from the RF
// null: (q/2) * offset, direction along the offset, with an isotropic
// residual floor added in quadrature per component so the magnitude at
// zero offset equals the floor exactly.
inline Eigen::Vector2d micromotion_amplitude(const TrapParameters& trap,
                                             const Eigen::Vector2d& radial_offset,
                                             double residual_floor) {
  if (radial_offset.norm() > harmonic_validity_radius)
    throw PreconditionViolated("radial offset outside harmonic validity region");
  if (residual_floor < 0)
    throw PreconditionViolated("residual floor must be >= 0");
  const Eigen::Vector2d driven = 0.5 * mathieu_q(trap) * radial_offset;
  const double f = residual_floor / std::sqrt(2.0);
  return {std::hypot(driven(0), f), std::hypot(driven(1), f)};
}

enum class Configuration { A, B, custom };

struct IonLayout {
  Configuration label = Configuration::A;
  std::array<Eigen::Vector3d, 2> positions{};              // m, (x, y, z)
  std::array<Eigen::Vector2d, 2> micromotion_amplitudes{}; // m, (x, z)
  double switch_duration = 80e-6; // s, metadata for the sequencer
};

// Configuration A: both ions on the trap axis at y = -/+ d/2.
// Configuration B: ion 2 additionally displaced radially by ion2_offset.
inline IonLayout make_layout(const TrapParameters& trap, Configuration label,
                             const Eigen::Vector2d& ion2_offset,
                             double residual_floor) {
  const double d = two_ion_spacing(trap);
  IonLayout layout;
  layout.label = label;
  layout.positions[0] = {0.0, -0.5 * d, 0.0};
  layout.positions[1] = {0.0, +0.5 * d, 0.0};
  layout.micromotion_amplitudes[0] =
      micromotion_amplitude(trap, Eigen::Vector2d::Zero(), residual_floor);

  if (label == Configuration::B) {
    layout.positions[1](0) += ion2_offset(0);
    layout.positions[1](2) += ion2_offset(1);
    layout.micromotion_amplitudes[1] =
        micromotion_amplitude(trap, ion2_offset, residual_floor);
  } else {
    layout.micromotion_amplitudes[1] =
        micromotion_amplitude(trap, Eigen::Vector2d::Zero(), residual_floor);
  }
  return layout;
}

// Radial (x, z) coordinates of an ion.
inline Eigen::Vector2d radial_position(const IonLayout& layout, int ion) {
  const auto& p = layout.positions[static_cast<size_t>(ion)];
  return {p(0), p(2)};
}

} // namespace mwaddr::trap
