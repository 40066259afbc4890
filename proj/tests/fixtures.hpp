#pragma once

// Shared synthetic fixtures: three electrode basis fields at realistic
// near-field scale (uniform ~ mT/A, quadrupole ~ 100 T/m/A) and the trap
// operating parameters.  configs/basis_default.json carries the same
// basis numbers for the CLI.

#include <complex>

#include "mwaddr/fieldmodel.hpp"
#include "mwaddr/trapmodel.hpp"
#include "mwaddr/units.hpp"

namespace fixtures {

using cd = std::complex<double>;

inline mwaddr::field::BasisSet default_bases() {
  using mwaddr::field::Electrode;
  mwaddr::field::BasisSet b;

  b[0].id = Electrode::MW1;
  b[0].uniform << cd(1.2e-3, 2.0e-4), cd(-0.7e-3, 1.0e-4);
  b[0].quadrupole << cd(90, 10), cd(40, -5), cd(40, -5), cd(-90, -10);

  b[1].id = Electrode::MW2;
  b[1].uniform << cd(0.4e-3, -1.0e-4), cd(1.5e-3, 3.0e-4);
  b[1].quadrupole << cd(-60, 8), cd(25, 12), cd(25, 12), cd(60, -8);

  b[2].id = Electrode::MW3;
  b[2].uniform << cd(-0.9e-3, 0.0), cd(0.6e-3, -2.0e-4);
  b[2].quadrupole << cd(110, -6), cd(-35, 9), cd(-35, 9), cd(-110, 6);

  return b;
}

// Single-electrode layout producing an exactly known parallel profile:
// B_par(x, z) = residual + gradient * z for the 15-degree axis.
inline mwaddr::field::BasisSet ramp_basis(double residual_tesla,
                                          double gradient_t_per_m) {
  const double c = std::cos(mwaddr::units::deg_to_rad(15.0));
  mwaddr::field::BasisSet b;
  b[0].id = mwaddr::field::Electrode::MW1;
  b[0].uniform << cd(0, 0), cd(residual_tesla / c, 0);
  b[0].quadrupole << cd(-gradient_t_per_m / c, 0), cd(0, 0), cd(0, 0),
      cd(gradient_t_per_m / c, 0);
  b[1].id = mwaddr::field::Electrode::MW2;
  b[2].id = mwaddr::field::Electrode::MW3;
  return b;
}

inline mwaddr::field::QuantizationAxis default_axis() {
  return mwaddr::field::QuantizationAxis::from_angle_deg(15.0);
}

inline mwaddr::trap::TrapParameters default_trap() {
  using mwaddr::units::mhz_to_angular;
  mwaddr::trap::TrapParameters t;
  t.rf_frequency = mhz_to_angular(71.6);
  t.axial_frequency = mhz_to_angular(1.4);
  t.radial_frequency = mhz_to_angular(7.0);
  t.ion_mass = mwaddr::constants::mg25_ion_mass_kg;
  return t;
}

} // namespace fixtures
