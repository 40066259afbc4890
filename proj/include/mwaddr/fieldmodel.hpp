#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "mwaddr/errors.hpp"
#include "mwaddr/hyperfine.hpp"
#include "mwaddr/units.hpp"

// Microwave near-field model: near the trap center each electrode k
// contributes a y-independent field in the x-z plane,
//   B_k(r) = I_k (u_k + G_k r),
// with a uniform term u_k and a symmetric traceless quadrupole G_k
// (Maxwell constraints for a source-free quasistatic 2-D field).

namespace mwaddr::field {

enum class Electrode { MW1 = 0, MW2 = 1, MW3 = 2 };

inline const char* electrode_name(Electrode e) {
  switch (e) {
    case Electrode::MW1: return "MW1";
    case Electrode::MW2: return "MW2";
    case Electrode::MW3: return "MW3";
  }
  return "?";
}

struct ElectrodeBasisField {
  Electrode id = Electrode::MW1;
  Eigen::Vector2cd uniform = Eigen::Vector2cd::Zero();    // T/A
  Eigen::Matrix2cd quadrupole = Eigen::Matrix2cd::Zero(); // T/m/A

  void validate() const {
    const double scale = std::max(1e-30, quadrupole.cwiseAbs().maxCoeff());
    if (std::abs(quadrupole(0, 1) - quadrupole(1, 0)) > 1e-12 * scale)
      throw ConfigError(std::string(electrode_name(id)) +
                        ": quadrupole matrix must be symmetric");
    if (std::abs(quadrupole(0, 0) + quadrupole(1, 1)) > 1e-12 * scale)
      throw ConfigError(std::string(electrode_name(id)) +
                        ": quadrupole matrix must be traceless");
  }
};

using BasisSet = std::array<ElectrodeBasisField, 3>;

struct DriveConfiguration {
  std::array<std::complex<double>, 3> currents{}; // A, amplitude and phase
  double drive_frequency = 0;                     // rad/s
};

struct QuantizationAxis {
  Eigen::Vector3d unit = Eigen::Vector3d::UnitZ();

  // Static-field direction in the y-z plane, tilted from z.
  static QuantizationAxis from_angle_deg(double angle_from_z_deg) {
    const double a = units::deg_to_rad(angle_from_z_deg);
    return QuantizationAxis{{0.0, std::sin(a), std::cos(a)}};
  }

  void validate() const {
    if (std::abs(unit.norm() - 1.0) > 1e-12)
      throw ConfigError("quantization axis must be a unit vector");
  }
};

inline constexpr double quadrupole_validity_radius = 3e-6; // m

inline bool within_validity_radius(const Eigen::Vector2d& position,
                                   double radius = quadrupole_validity_radius) {
  return position.norm() <= radius;
}

inline Eigen::Vector2cd combined_uniform(const BasisSet& bases,
                                         const DriveConfiguration& drive) {
  Eigen::Vector2cd u = Eigen::Vector2cd::Zero();
  for (size_t k = 0; k < 3; ++k) u += drive.currents[k] * bases[k].uniform;
  return u;
}

inline Eigen::Matrix2cd combined_quadrupole(const BasisSet& bases,
                                            const DriveConfiguration& drive) {
  Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
  for (size_t k = 0; k < 3; ++k) g += drive.currents[k] * bases[k].quadrupole;
  return g;
}

// Complex field amplitude at a position in the x-z plane.
inline Eigen::Vector2cd field_at(const BasisSet& bases,
                                 const DriveConfiguration& drive,
                                 const Eigen::Vector2d& position) {
  return combined_uniform(bases, drive) +
         combined_quadrupole(bases, drive) * position.cast<std::complex<double>>();
}

struct Decomposition {
  std::complex<double> parallel; // complex amplitude along the axis
  double perpendicular;          // root-sum-square transverse magnitude
};

// Split a (B_x, B_z) amplitude, embedded with B_y = 0, into components
// along and transverse to the quantization axis.
inline Decomposition decompose(const Eigen::Vector2cd& field,
                               const QuantizationAxis& axis) {
  axis.validate();
  const Eigen::Vector3cd b(field(0), 0.0, field(1));
  const std::complex<double> parallel = axis.unit.cast<std::complex<double>>().dot(b);
  const Eigen::Vector3cd transverse = b - parallel * axis.unit.cast<std::complex<double>>();
  return {parallel, transverse.norm()};
}

// Gradient of the parallel component: the parallel amplitude is affine in
// position, p(r) = p0 + g.r with complex g.  Returns the real gradient of
// |p|; at a zero of p it degrades to the per-axis gradient |g_j| of the
// amplitude magnitude.
inline Eigen::Vector2cd parallel_gradient(const BasisSet& bases,
                                          const DriveConfiguration& drive,
                                          const QuantizationAxis& axis) {
  const Eigen::Matrix2cd g = combined_quadrupole(bases, drive);
  const Eigen::Vector2cd axis_xz(axis.unit(0), axis.unit(2));
  return g.transpose() * axis_xz;
}

struct FieldSample {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2cd field = Eigen::Vector2cd::Zero();
  std::complex<double> parallel_amplitude;
  double perpendicular_amplitude = 0;
  Eigen::Vector2d gradient_parallel = Eigen::Vector2d::Zero();
};

inline FieldSample sample(const BasisSet& bases, const DriveConfiguration& drive,
                          const QuantizationAxis& axis,
                          const Eigen::Vector2d& position) {
  FieldSample s;
  s.position = position;
  s.field = field_at(bases, drive, position);
  const Decomposition d = decompose(s.field, axis);
  s.parallel_amplitude = d.parallel;
  s.perpendicular_amplitude = d.perpendicular;
  const Eigen::Vector2cd g = parallel_gradient(bases, drive, axis);
  const double p_abs = std::abs(d.parallel);
  if (p_abs > 0) {
    s.gradient_parallel =
        Eigen::Vector2d((std::conj(d.parallel) * g(0)).real(),
                        (std::conj(d.parallel) * g(1)).real()) /
        p_abs;
  } else {
    s.gradient_parallel = Eigen::Vector2d(std::abs(g(0)), std::abs(g(1)));
  }
  return s;
}

struct NullResult {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double residual_norm = 0;   // |B| at the minimizer, T
  bool imperfect = false;     // residual^2 above 1e-15 T^2
};

// Minimizer of |B(r)|^2, which is quadratic in the real position:
//   r* = -Re(G^H G)^{-1} Re(G^H u).
// A complex uniform and gradient part need not share a common zero, so
// the result carries an imperfect-null flag instead of failing.
inline NullResult find_null(const BasisSet& bases, const DriveConfiguration& drive) {
  const Eigen::Matrix2cd g = combined_quadrupole(bases, drive);
  const Eigen::Vector2cd u = combined_uniform(bases, drive);

  const Eigen::JacobiSVD<Eigen::Matrix2cd> svd(g);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(1);
  if (smax <= 0 || smin <= 1e-14 * smax)
    throw SingularGradient("combined quadrupole matrix is singular");

  const Eigen::Matrix2d normal = (g.adjoint() * g).real();
  const Eigen::Vector2d rhs = -(g.adjoint() * u).real();
  NullResult out;
  out.position = normal.ldlt().solve(rhs);
  out.residual_norm = field_at(bases, drive, out.position).norm();
  out.imperfect = out.residual_norm * out.residual_norm > 1e-15;
  return out;
}

struct PiTimeSample {
  FieldSample field;
  double t_pi = 0; // s, infinity where the parallel drive vanishes
};

// T_pi = pi / Omega over a grid, with Omega from the decomposed parallel
// component of the drive at each position.
inline std::vector<PiTimeSample> pi_time_map(
    const BasisSet& bases, const DriveConfiguration& drive,
    const hyperfine::LevelSet& levels, int level_a, int level_b,
    const QuantizationAxis& axis, const std::vector<Eigen::Vector2d>& grid) {
  std::vector<PiTimeSample> out;
  out.reserve(grid.size());
  for (const auto& r : grid) {
    PiTimeSample p;
    p.field = sample(bases, drive, axis, r);
    const double omega =
        hyperfine::rabi_rate(levels, level_a, level_b, p.field.parallel_amplitude);
    p.t_pi = omega > 0 ? units::pi / omega : std::numeric_limits<double>::infinity();
    out.push_back(std::move(p));
  }
  return out;
}

} // namespace mwaddr::field
