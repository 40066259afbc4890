#pragma once

// Physical constants, CODATA 2018 recommended values.
// All atomic data for 25Mg+ live here (and in configs/mg25.json, which
// carries the same numbers for runtime ingestion):
//   hyperfine constant A(2S1/2) = -596.254376 MHz
//       Itano & Wineland, Phys. Rev. A 24, 1364 (1981)
//   nuclear moment mu_I(25Mg) = -0.85545 mu_N  (I = 5/2)
//       Stone, At. Data Nucl. Data Tables 90, 75 (2005)
//   g_J taken as the free-electron g; bound-state corrections are far
//   below every tolerance used in this project.
//   ion mass = m(25Mg) - m_e = 24.985836976 u - 0.000548580 u

namespace mwaddr::constants {

inline constexpr double hbar = 1.054571817e-34;              // J s
inline constexpr double h_planck = 6.62607015e-34;           // J s
inline constexpr double mu_bohr = 9.2740100783e-24;          // J/T
inline constexpr double mu_nuclear = 5.0507837461e-27;       // J/T
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double coulomb_constant = 8.9875517873681764e9; // N m^2 C^-2
inline constexpr double electron_mass_u = 5.48579909065e-4;   // u

// 25Mg+ ground state 2S1/2
inline constexpr double mg25_nuclear_spin = 2.5;
inline constexpr double mg25_hyperfine_A_MHz = -596.254376;
inline constexpr double mg25_g_J = 2.00231930436256;
// Convention: H_Zeeman = mu_B * B * (g_J Jz + g_I Iz), so
// g_I = -(mu_I / I) / mu_B = +0.34218 * mu_N / mu_B.
inline constexpr double mg25_g_I =
    0.34218 * (mu_nuclear / mu_bohr);
inline constexpr double mg25_ion_mass_kg =
    (24.985836976 - electron_mass_u) * atomic_mass_unit;

} // namespace mwaddr::constants
