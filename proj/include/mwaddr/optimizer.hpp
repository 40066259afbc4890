#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "mwaddr/addressing.hpp"
#include "mwaddr/errors.hpp"
#include "mwaddr/fieldmodel.hpp"
#include "mwaddr/hyperfine.hpp"
#include "mwaddr/rng.hpp"
#include "mwaddr/trapmodel.hpp"

// Current design and control-error budgeting.  The design problem is a
// square complex linear system: two complex equations pin the field at
// the target position (to zero, for a null) and one pins the directional
// gradient of B_par; three complex electrode currents solve it exactly.

namespace mwaddr::design {

struct DesignTarget {
  Eigen::Vector2d null_position = Eigen::Vector2d::Zero(); // m
  double gradient_target = 0;                              // T/m
  Eigen::Vector2d gradient_direction = Eigen::Vector2d(0, 1);
  double frequency = 0; // rad/s

  void validate() const {
    if (!(gradient_target >= 1.0 && gradient_target <= 100.0))
      throw ConfigError("gradient target outside the supported 1-100 T/m range");
    if (std::abs(gradient_direction.norm() - 1.0) > 1e-9)
      throw ConfigError("gradient direction must be a unit vector");
  }
};

// Solve for the three complex currents.  The optional residual field
// relaxes the null equations to a prescribed value at the target position
// (used to model imperfect experimental nulls); the default keeps them
// homogeneous.  The returned currents are gauge-fixed: the first current
// of significant magnitude is rotated real-positive.
inline field::DriveConfiguration solve_currents(
    const field::BasisSet& bases, const field::QuantizationAxis& axis,
    const DesignTarget& target,
    const Eigen::Vector2cd& residual_field = Eigen::Vector2cd::Zero()) {
  target.validate();
  axis.validate();

  const Eigen::Vector2cd axis_xz(axis.unit(0), axis.unit(2));
  const Eigen::Vector2cd dir = target.gradient_direction.cast<std::complex<double>>();

  Eigen::Matrix3cd m;
  for (int k = 0; k < 3; ++k) {
    const auto& basis = bases[static_cast<size_t>(k)];
    const Eigen::Vector2cd field_here =
        basis.uniform +
        basis.quadrupole * target.null_position.cast<std::complex<double>>();
    m(0, k) = field_here(0);
    m(1, k) = field_here(1);
    const Eigen::Vector2cd grad_row = basis.quadrupole.transpose() * axis_xz;
    m(2, k) = grad_row(0) * dir(0) + grad_row(1) * dir(1);
  }
  Eigen::Vector3cd rhs(residual_field(0), residual_field(1),
                       target.gradient_target);

  const Eigen::JacobiSVD<Eigen::Matrix3cd> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(2);
  if (smax <= 0 || smin < 1e-10 * smax) {
    // singular: decide whether the right-hand side is even reachable
    const Eigen::Vector3cd left_null = svd.matrixU().col(2);
    const double overlap = std::abs(left_null.dot(rhs));
    const double cond = smax > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (overlap > 1e-10 * rhs.norm())
      throw InfeasibleGradient(
          "target gradient lies outside the space reachable by these electrodes");
    throw SingularSystem("design system singular (condition number " +
                             std::to_string(cond) + ")",
                         cond);
  }

  Eigen::Vector3cd currents = m.fullPivLu().solve(rhs);

  // gauge fix
  for (int k = 0; k < 3; ++k) {
    const double mag = std::abs(currents(k));
    if (mag > 1e-15 * currents.norm()) {
      currents *= std::conj(currents(k)) / mag;
      break;
    }
  }

  field::DriveConfiguration drive;
  drive.currents = {currents(0), currents(1), currents(2)};
  drive.drive_frequency = target.frequency;
  return drive;
}

struct SensitivityReport {
  double amplitude_error_rms = 0; // fractional
  double phase_error_rms = 0;     // rad
  double residual_parallel_median = 0; // T
  double residual_parallel_p90 = 0;    // T
  double spectator_rate_median = 0;    // rad/s
  double spectator_rate_p90 = 0;       // rad/s
  int trials = 0;
  uint64_t seed = 0;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace detail

// Monte-Carlo over per-electrode control errors: multiplicative Gaussian
// amplitude errors and additive Gaussian phase errors.  Per trial, the
// residual B_par at the nominal null and the spectator Rabi rate it
// implies.  Substreams make the result independent of evaluation order.
inline SensitivityReport sensitivity(
    const field::BasisSet& bases, const field::QuantizationAxis& axis,
    const field::DriveConfiguration& nominal, const Eigen::Vector2d& null_position,
    const hyperfine::LevelSet& levels, const addressing::QubitPair& pair,
    double amplitude_error_rms, double phase_error_rms, int trials,
    uint64_t seed) {
  if (trials < 100) throw PreconditionViolated("at least 100 trials required");
  if (amplitude_error_rms < 0 || phase_error_rms < 0)
    throw PreconditionViolated("error magnitudes must be non-negative");

  const double rate_per_tesla =
      constants::mu_bohr / constants::hbar *
      std::abs(levels.parallel_element(pair.down, pair.up));

  std::vector<double> residuals(static_cast<size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    rng::Substream stream(seed, static_cast<uint64_t>(t));
    field::DriveConfiguration perturbed = nominal;
    for (auto& current : perturbed.currents) {
      const double amp = 1.0 + amplitude_error_rms * stream.normal();
      const double phase = phase_error_rms * stream.normal();
      current *= amp * std::polar(1.0, phase);
    }
    const auto s = field::sample(bases, perturbed, axis, null_position);
    residuals[static_cast<size_t>(t)] = std::abs(s.parallel_amplitude);
  }
  std::sort(residuals.begin(), residuals.end());

  SensitivityReport report;
  report.amplitude_error_rms = amplitude_error_rms;
  report.phase_error_rms = phase_error_rms;
  report.residual_parallel_median = detail::quantile_sorted(residuals, 0.5);
  report.residual_parallel_p90 = detail::quantile_sorted(residuals, 0.9);
  report.spectator_rate_median = rate_per_tesla * report.residual_parallel_median;
  report.spectator_rate_p90 = rate_per_tesla * report.residual_parallel_p90;
  report.trials = trials;
  report.seed = seed;
  return report;
}

struct OffsetSweepRow {
  double offset = 0;          // m
  double rate_addressed = 0;  // rad/s (ion 2)
  double rate_spectator = 0;  // rad/s (ion 1)
  double crosstalk = 0;
};

struct OffsetSweepResult {
  std::vector<OffsetSweepRow> rows;
  bool crosstalk_monotone_decreasing = true;
};

// Crosstalk of the resonant (method I) addressing versus the radial
// push-out distance of the addressed ion.
inline OffsetSweepResult offset_sweep(
    const field::BasisSet& bases, const field::DriveConfiguration& drive,
    const hyperfine::LevelSet& levels, const trap::TrapParameters& trap_params,
    const field::QuantizationAxis& axis, const addressing::QubitPair& pair,
    const Eigen::Vector2d& offset_direction, const std::vector<double>& offsets,
    double residual_floor = 0) {
  OffsetSweepResult result;
  for (const double offset : offsets) {
    if (!field::within_validity_radius({offset, 0}))
      throw PreconditionViolated("offset outside the quadrupole validity radius");
    const trap::IonLayout layout =
        trap::make_layout(trap_params, trap::Configuration::B,
                          offset * offset_direction, residual_floor);
    const addressing::MethodReport report =
        addressing::method_I(bases, drive, layout, levels, axis, pair);
    result.rows.push_back(OffsetSweepRow{offset, report.rate_q2, report.rate_q1,
                                         report.crosstalk.value()});
  }
  for (size_t k = 1; k < result.rows.size(); ++k)
    if (!(result.rows[k].crosstalk < result.rows[k - 1].crosstalk))
      result.crosstalk_monotone_decreasing = false;
  return result;
}

} // namespace mwaddr::design
