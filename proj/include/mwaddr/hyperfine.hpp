#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "mwaddr/angular.hpp"
#include "mwaddr/constants.hpp"
#include "mwaddr/errors.hpp"
#include "mwaddr/units.hpp"

// Ground-state hyperfine/Zeeman structure and magnetic-dipole couplings.
//
// Hamiltonian (rad/s):  H = A (I.J) + (mu_B/hbar) B0 (g_J Jz + g_I Iz),
// quantization axis along the static field.  The energy zero is the
// center of gravity of the manifold (the Hamiltonian is traceless, so
// diagonalization gives centered energies directly).

namespace mwaddr::hyperfine {

struct AtomParameters {
  double nuclear_spin;        // I
  double electron_spin;       // J
  double hyperfine_constant;  // A, rad/s
  double electronic_g_factor; // g_J
  double nuclear_g_factor;    // g_I, Bohr-magneton convention
  double mass;                // kg

  void validate() const {
    auto half_integer = [](double j) {
      return j >= 0 && std::abs(2.0 * j - std::lround(2.0 * j)) < 1e-12;
    };
    if (!half_integer(nuclear_spin) || !half_integer(electron_spin))
      throw ConfigError("spins must be non-negative half-integers");
    if (!(mass > 0)) throw ConfigError("atom mass must be positive");
  }
};

inline AtomParameters mg25() {
  using namespace constants;
  return AtomParameters{mg25_nuclear_spin, 0.5,
                        units::mhz_to_angular(mg25_hyperfine_A_MHz),
                        mg25_g_J, mg25_g_I, mg25_ion_mass_kg};
}

struct HyperfineLevel {
  double F;                     // low-field total angular momentum label
  double mF;                    // exact projection quantum number
  double energy;                // rad/s
  Eigen::VectorXcd amplitudes;  // |m_I, m_J> basis, index = iI*dimJ + iJ, m ascending
};

struct LevelSet {
  AtomParameters atom;
  double static_field_B0 = 0;          // T
  std::vector<HyperfineLevel> levels;  // sorted by energy, ascending

  // Magnetic-moment operators in the product basis, units of mu_B:
  // parallel = g_J Jz + g_I Iz, perpendicular = g_J Jx + g_I Ix.
  Eigen::MatrixXcd moment_parallel;
  Eigen::MatrixXcd moment_perpendicular;

  int size() const { return static_cast<int>(levels.size()); }

  const HyperfineLevel& at(int id) const {
    if (id < 0 || id >= size())
      throw UnknownLevel("level id " + std::to_string(id) + " out of range");
    return levels[static_cast<size_t>(id)];
  }

  int find(double F, double mF) const {
    for (int k = 0; k < size(); ++k)
      if (std::abs(levels[k].F - F) < 1e-9 && std::abs(levels[k].mF - mF) < 1e-9)
        return k;
    throw UnknownLevel("no level with F=" + std::to_string(F) +
                       ", mF=" + std::to_string(mF));
  }

  std::complex<double> parallel_element(int a, int b) const {
    return at(a).amplitudes.dot(moment_parallel * at(b).amplitudes);
  }

  std::complex<double> perpendicular_element(int a, int b) const {
    return at(a).amplitudes.dot(moment_perpendicular * at(b).amplitudes);
  }
};

namespace detail {

// F labels available in an mF subspace, ordered so that the n-th lowest
// eigenvalue receives the n-th label.  For A < 0 the higher-F manifold
// lies lower; adiabatic continuation keeps the assignment valid at any
// field because levels of equal mF do not cross.
inline std::vector<double> f_labels_for_subspace(double I, double J, double mF,
                                                 double A) {
  std::vector<double> fs;
  const double f_min = std::max(std::abs(I - J), std::abs(mF));
  for (double f = f_min; f <= I + J + 1e-9; f += 1.0) fs.push_back(f);
  if (A < 0)
    std::sort(fs.begin(), fs.end(), std::greater<>());
  else
    std::sort(fs.begin(), fs.end());
  return fs;
}

} // namespace detail

inline LevelSet diagonalize(const AtomParameters& atom, double B0) {
  atom.validate();
  if (B0 < 0) throw PreconditionViolated("static field must be non-negative");

  const double I = atom.nuclear_spin, J = atom.electron_spin;
  const int dI = angular::dimension(I), dJ = angular::dimension(J);
  const int n = dI * dJ;

  const Eigen::MatrixXcd eyeI = Eigen::MatrixXcd::Identity(dI, dI);
  const Eigen::MatrixXcd eyeJ = Eigen::MatrixXcd::Identity(dJ, dJ);
  const Eigen::MatrixXcd IdotJ =
      angular::kron(angular::jz(I), angular::jz(J)) +
      angular::kron(angular::jx(I), angular::jx(J)) +
      angular::kron(angular::jy(I), angular::jy(J));
  const Eigen::MatrixXcd Mpar =
      atom.electronic_g_factor * angular::kron(eyeI, angular::jz(J)) +
      atom.nuclear_g_factor * angular::kron(angular::jz(I), eyeJ);
  const Eigen::MatrixXcd Mperp =
      atom.electronic_g_factor * angular::kron(eyeI, angular::jx(J)) +
      atom.nuclear_g_factor * angular::kron(angular::jx(I), eyeJ);

  const double zeeman = constants::mu_bohr / constants::hbar * B0;
  const Eigen::MatrixXcd H = atom.hyperfine_constant * IdotJ + zeeman * Mpar;

  // mF is conserved: diagonalize each mF block separately so eigenvectors
  // carry exact projection quantum numbers even through degeneracies.
  std::map<long, std::vector<int>> blocks; // key = round(2 mF)
  for (int p = 0; p < n; ++p) {
    const double mI = angular::m_value(I, p / dJ);
    const double mJ = angular::m_value(J, p % dJ);
    blocks[std::lround(2 * (mI + mJ))].push_back(p);
  }

  LevelSet out;
  out.atom = atom;
  out.static_field_B0 = B0;
  out.moment_parallel = Mpar;
  out.moment_perpendicular = Mperp;
  out.levels.reserve(static_cast<size_t>(n));

  for (const auto& [key2mF, idx] : blocks) {
    const double mF = 0.5 * static_cast<double>(key2mF);
    const int b = static_cast<int>(idx.size());
    Eigen::MatrixXcd Hb(b, b);
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < b; ++c) Hb(r, c) = H(idx[r], idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(Hb);
    const auto labels =
        detail::f_labels_for_subspace(I, J, mF, atom.hyperfine_constant);

    for (int k = 0; k < b; ++k) {
      HyperfineLevel lvl;
      lvl.F = labels[static_cast<size_t>(k)];
      lvl.mF = mF;
      lvl.energy = solver.eigenvalues()(k);
      lvl.amplitudes = Eigen::VectorXcd::Zero(n);
      for (int r = 0; r < b; ++r)
        lvl.amplitudes(idx[r]) = solver.eigenvectors()(r, k);
      // canonical phase: largest-magnitude amplitude real positive
      int imax = 0;
      for (int r = 1; r < n; ++r)
        if (std::abs(lvl.amplitudes(r)) > std::abs(lvl.amplitudes(imax))) imax = r;
      const std::complex<double> big = lvl.amplitudes(imax);
      if (std::abs(big) > 0)
        lvl.amplitudes *= std::conj(big) / std::abs(big);
      out.levels.push_back(std::move(lvl));
    }
  }

  std::sort(out.levels.begin(), out.levels.end(),
            [](const HyperfineLevel& x, const HyperfineLevel& y) {
              return x.energy < y.energy;
            });
  return out;
}

inline double transition_frequency(const LevelSet& levels, int a, int b) {
  if (a == b) throw PreconditionViolated("transition requires two distinct levels");
  return std::abs(levels.at(a).energy - levels.at(b).energy);
}

struct LevelLabels {
  double F;
  double mF;
};

// Field where the a<->b transition frequency is stationary, located by a
// central-difference derivative scan (step 1e-5 T) plus bisection.
inline double field_independent_point(const AtomParameters& atom,
                                      const LevelLabels& a, const LevelLabels& b,
                                      double field_lo, double field_hi) {
  constexpr double step = 1e-5; // T, differentiation step
  if (!(field_lo >= step) || !(field_hi > field_lo))
    throw PreconditionViolated("search range must satisfy step <= lo < hi");

  auto frequency = [&](double B) {
    const LevelSet ls = diagonalize(atom, B);
    return transition_frequency(ls, ls.find(a.F, a.mF), ls.find(b.F, b.mF));
  };
  auto derivative = [&](double B) {
    return (frequency(B + step) - frequency(B - step)) / (2 * step);
  };

  constexpr int n_scan = 141;
  std::vector<double> d(n_scan);
  for (int k = 0; k < n_scan; ++k)
    d[static_cast<size_t>(k)] =
        derivative(field_lo + (field_hi - field_lo) * k / (n_scan - 1));

  int crossings = 0, first = -1;
  for (int k = 0; k + 1 < n_scan; ++k) {
    const double p = d[static_cast<size_t>(k)] * d[static_cast<size_t>(k + 1)];
    if (p < 0 || d[static_cast<size_t>(k)] == 0) {
      ++crossings;
      if (first < 0) first = k;
    }
  }
  if (crossings == 0)
    throw NoStationaryPoint("transition frequency derivative has no sign change in range");
  if (crossings > 1)
    throw MultipleStationaryPoints("more than one stationary point in range");

  double lo = field_lo + (field_hi - field_lo) * first / (n_scan - 1);
  double hi = field_lo + (field_hi - field_lo) * (first + 1) / (n_scan - 1);
  double d_lo = derivative(lo);
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    const double d_mid = derivative(mid);
    if (d_mid == 0) return mid;
    if ((d_lo < 0) == (d_mid < 0)) {
      lo = mid;
      d_lo = d_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Rabi rate for a single-tone drive with complex field amplitudes
// resolved along (parallel) and transverse to (perpendicular) the
// quantization axis.  Convention: on-resonance spin-flip probability is
// sin^2(Omega t / 2), i.e. T_pi = pi / Omega.  The perpendicular
// amplitude is treated as linearly polarized in the transverse plane.
inline double rabi_rate(const LevelSet& levels, int a, int b,
                        std::complex<double> field_parallel,
                        std::complex<double> field_perpendicular = 0.0) {
  if (a == b) throw PreconditionViolated("rabi_rate requires two distinct levels");
  if (std::abs(levels.at(a).mF - levels.at(b).mF) > 1.0 + 1e-9) return 0.0;
  const std::complex<double> element =
      levels.parallel_element(a, b) * field_parallel +
      levels.perpendicular_element(a, b) * field_perpendicular;
  return constants::mu_bohr / constants::hbar * std::abs(element);
}

struct AcZeemanCoefficients {
  double c_parallel;      // rad/s per T^2
  double c_perpendicular; // rad/s per T^2
  double detuning;        // rad/s, relative to the a<->b transition
};

// Differential second-order shift of the a<->b transition under an
// off-resonant drive at omega = omega_ab + detuning:
//   d(omega_ab) = c_par |B_par|^2 + c_perp B_perp^2,
// summed over all dipole-coupled intermediate levels with rotating and
// counter-rotating denominators.  The sign is shift(b) - shift(a).
inline AcZeemanCoefficients ac_zeeman_coefficients(const LevelSet& levels,
                                                   int a, int b,
                                                   double detuning) {
  const double w_ab = transition_frequency(levels, a, b);
  const double w_mw = std::abs(w_ab + detuning);
  constexpr double guard = units::two_pi * 1e3; // resonance exclusion, rad/s
  constexpr double negligible = 1e-12;          // matrix-element cutoff, mu_B

  const double scale = constants::mu_bohr / constants::hbar;
  double c_par = 0, c_perp = 0;
  for (const auto& [level, sign] : {std::pair{b, +1.0}, std::pair{a, -1.0}}) {
    for (int k = 0; k < levels.size(); ++k) {
      if (k == level) continue;
      const double m_par = std::abs(levels.parallel_element(level, k));
      const double m_perp = std::abs(levels.perpendicular_element(level, k));
      if (m_par < negligible && m_perp < negligible) continue;

      const double dw = levels.at(level).energy - levels.at(k).energy;
      if (std::abs(std::abs(dw) - w_mw) < guard)
        throw ResonantIntermediateState(
            "drive within 1 kHz of the transition between levels " +
                std::to_string(level) + " and " + std::to_string(k),
            std::abs(dw));

      const double denom = 0.25 * (1.0 / (dw - w_mw) + 1.0 / (dw + w_mw));
      c_par += sign * scale * scale * m_par * m_par * denom;
      c_perp += sign * scale * scale * m_perp * m_perp * denom;
    }
  }
  return AcZeemanCoefficients{c_par, c_perp, detuning};
}

} // namespace mwaddr::hyperfine
