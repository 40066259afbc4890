#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwaddr/errors.hpp"
#include "mwaddr/fieldmodel.hpp"
#include "mwaddr/hyperfine.hpp"
#include "mwaddr/spindynamics.hpp"
#include "mwaddr/trapmodel.hpp"
#include "mwaddr/units.hpp"

// The four individual-addressing methods, each producing one comparison
// row: per-ion rates, spectator crosstalk, differential ac Zeeman shift.
// Ion 2 is the addressed ion (it is the one displaced in configuration B);
// ion 1 is the spectator.
//
// Every method accepts either the physical pipeline (electrode bases +
// currents -> fields -> rates) or directly injected rates, so measured
// numbers can be reproduced exactly where field amplitudes are unknown.

namespace mwaddr::addressing {

enum class Method { I, II, III, IV };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::I: return "I";
    case Method::II: return "II";
    case Method::III: return "III";
    case Method::IV: return "IV";
  }
  return "?";
}

struct QubitPair {
  int down = 0;
  int up = 0;
};

struct MethodReport {
  Method method = Method::I;
  double rate_q1 = 0; // rad/s; sigma_z-rotation rate for method III
  double rate_q2 = 0;
  std::optional<double> crosstalk;        // spin-flip probability
  std::optional<double> differential_acz; // rad/s, signed (ion2 - ion1)
  std::string notes;

  void validate() const {
    if (rate_q1 < 0 || rate_q2 < 0)
      throw ModelError("report rates must be non-negative");
    if (crosstalk && (*crosstalk < 0 || *crosstalk > 1))
      throw ModelError("crosstalk must be a probability");
    if (method == Method::I && differential_acz)
      throw ModelError("method I carries no differential ac Zeeman shift");
  }
};

struct RateInjection {
  std::optional<double> rate_q1; // rad/s
  std::optional<double> rate_q2;
};

inline double qubit_frequency(const hyperfine::LevelSet& levels,
                              const QubitPair& pair) {
  return hyperfine::transition_frequency(levels, pair.down, pair.up);
}

// Second-order shift of the a<->b transition for one field sample.
inline double acz_shift_of_sample(const hyperfine::AcZeemanCoefficients& coeff,
                                  const field::FieldSample& s) {
  return coeff.c_parallel * std::norm(s.parallel_amplitude) +
         coeff.c_perpendicular * s.perpendicular_amplitude *
             s.perpendicular_amplitude;
}

namespace detail {

inline void require_drive_frequency(double actual, double expected,
                                    const std::string& what) {
  if (std::abs(actual - expected) > 1e-6 * std::abs(expected) + 1e-3)
    throw PreconditionViolated("drive frequency must equal " + what);
}

inline field::FieldSample sample_at_ion(const field::BasisSet& bases,
                                        const field::DriveConfiguration& drive,
                                        const field::QuantizationAxis& axis,
                                        const trap::IonLayout& layout, int ion) {
  return field::sample(bases, drive, axis, trap::radial_position(layout, ion));
}

inline std::string format_ut(double tesla) {
  std::ostringstream os;
  os.precision(3);
  os << units::tesla_to_ut(tesla) << " uT";
  return os.str();
}

} // namespace detail

// Method I: resonant drive with the field minimized at the spectator.
inline MethodReport method_I(const field::BasisSet& bases,
                             const field::DriveConfiguration& drive,
                             const trap::IonLayout& layout,
                             const hyperfine::LevelSet& levels,
                             const field::QuantizationAxis& axis,
                             const QubitPair& pair,
                             const RateInjection& inject = {}) {
  MethodReport report;
  report.method = Method::I;

  if (inject.rate_q1 && inject.rate_q2) {
    report.rate_q1 = *inject.rate_q1;
    report.rate_q2 = *inject.rate_q2;
    report.notes = "rates injected";
  } else {
    detail::require_drive_frequency(drive.drive_frequency,
                                    qubit_frequency(levels, pair),
                                    "the qubit frequency");
    const auto s1 = detail::sample_at_ion(bases, drive, axis, layout, 0);
    const auto s2 = detail::sample_at_ion(bases, drive, axis, layout, 1);
    report.rate_q1 = hyperfine::rabi_rate(levels, pair.down, pair.up,
                                          s1.parallel_amplitude);
    report.rate_q2 = hyperfine::rabi_rate(levels, pair.down, pair.up,
                                          s2.parallel_amplitude);
    report.notes = "B_par q1 " + detail::format_ut(std::abs(s1.parallel_amplitude)) +
                   ", q2 " + detail::format_ut(std::abs(s2.parallel_amplitude));
  }
  report.crosstalk = spin::crosstalk_resonant_pi(report.rate_q2, report.rate_q1);
  report.validate();
  return report;
}

struct MicromotionOptions {
  double efficiency = 1.0; // absorbs unmodeled quadrupole geometry
  RateInjection inject;
  // parallel carrier amplitudes at the two ions, T; overrides the field
  // evaluation in the ac Zeeman part when the currents are unknown
  std::optional<std::pair<double, double>> carrier_parallel;
};

// Method II: drive on the RF micromotion sideband; the sideband Rabi rate
// follows the field modulation along the micromotion trajectory.  The
// resonant tone at omega_q - omega_RF carries half of the modulation
// amplitude grad(B_par) . r_mm.
inline MethodReport method_II(const field::BasisSet& bases,
                              const field::DriveConfiguration& drive,
                              const trap::IonLayout& layout,
                              const hyperfine::LevelSet& levels,
                              const trap::TrapParameters& trap_params,
                              const field::QuantizationAxis& axis,
                              const QubitPair& pair,
                              const MicromotionOptions& opts = {}) {
  MethodReport report;
  report.method = Method::II;

  const double w_q = qubit_frequency(levels, pair);
  const double w_rf = trap_params.rf_frequency;

  if (opts.inject.rate_q1 && opts.inject.rate_q2) {
    report.rate_q1 = *opts.inject.rate_q1;
    report.rate_q2 = *opts.inject.rate_q2;
    report.notes = "rates injected";
  } else {
    detail::require_drive_frequency(drive.drive_frequency, w_q - w_rf,
                                    "the micromotion sideband frequency");
    const Eigen::Vector2cd grad = field::parallel_gradient(bases, drive, axis);
    for (int ion = 0; ion < 2; ++ion) {
      const Eigen::Vector2d r_mm =
          layout.micromotion_amplitudes[static_cast<size_t>(ion)];
      const double sideband_amplitude =
          0.5 * std::abs(grad(0) * r_mm(0) + grad(1) * r_mm(1)) * opts.efficiency;
      const double rate =
          hyperfine::rabi_rate(levels, pair.down, pair.up, sideband_amplitude);
      (ion == 0 ? report.rate_q1 : report.rate_q2) = rate;
    }
  }

  if (report.rate_q1 == 0 && report.rate_q2 == 0) {
    report.crosstalk = 0.0;
    report.notes += (report.notes.empty() ? "" : "; ");
    report.notes += "degenerate input: no micromotion on either ion";
  } else {
    report.crosstalk = spin::crosstalk_resonant_pi(report.rate_q2, report.rate_q1);
  }

  // carrier fields produce the differential ac Zeeman shift to compensate
  const auto coeff =
      hyperfine::ac_zeeman_coefficients(levels, pair.down, pair.up, -w_rf);
  double b1 = 0, b2 = 0, shift1 = 0, shift2 = 0;
  if (opts.carrier_parallel) {
    b1 = opts.carrier_parallel->first;
    b2 = opts.carrier_parallel->second;
    shift1 = coeff.c_parallel * b1 * b1;
    shift2 = coeff.c_parallel * b2 * b2;
  } else {
    const auto s1 = detail::sample_at_ion(bases, drive, axis, layout, 0);
    const auto s2 = detail::sample_at_ion(bases, drive, axis, layout, 1);
    auto shift = [&](const field::FieldSample& s) {
      return coeff.c_parallel * std::norm(s.parallel_amplitude) +
             coeff.c_perpendicular * s.perpendicular_amplitude *
                 s.perpendicular_amplitude;
    };
    shift1 = shift(s1);
    shift2 = shift(s2);
    b1 = s1.field.norm();
    b2 = s2.field.norm();
  }
  report.differential_acz = shift2 - shift1;
  report.notes += (report.notes.empty() ? "" : "; ");
  report.notes += "|B_MW| q1 " + detail::format_ut(b1) + ", q2 " +
                  detail::format_ut(b2);
  report.validate();
  return report;
}

struct SigmaZInjection {
  std::optional<double> shift_q1; // rad/s, signed
  std::optional<double> shift_q2;
};

// Method III: differential ac Zeeman shift as sigma_z control.  Rates are
// the magnitudes of the per-ion sigma_z rotation rates; crosstalk is left
// unquantified (it depends on how well the spectator phase is tracked).
inline MethodReport method_III(const field::BasisSet& bases,
                               const field::DriveConfiguration& drive,
                               const trap::IonLayout& layout,
                               const hyperfine::LevelSet& levels,
                               const field::QuantizationAxis& axis,
                               const QubitPair& pair, double detuning,
                               const SigmaZInjection& inject = {}) {
  MethodReport report;
  report.method = Method::III;

  double shift1 = 0, shift2 = 0;
  if (inject.shift_q1 && inject.shift_q2) {
    shift1 = *inject.shift_q1;
    shift2 = *inject.shift_q2;
    report.notes = "sigma_z rates injected";
  } else {
    const double w_q = qubit_frequency(levels, pair);
    detail::require_drive_frequency(drive.drive_frequency, w_q + detuning,
                                    "the detuned qubit frequency");
    const auto coeff =
        hyperfine::ac_zeeman_coefficients(levels, pair.down, pair.up, detuning);
    const auto s1 = detail::sample_at_ion(bases, drive, axis, layout, 0);
    const auto s2 = detail::sample_at_ion(bases, drive, axis, layout, 1);
    auto shift = [&](const field::FieldSample& s) {
      return coeff.c_parallel * std::norm(s.parallel_amplitude) +
             coeff.c_perpendicular * s.perpendicular_amplitude *
                 s.perpendicular_amplitude;
    };
    shift1 = shift(s1);
    shift2 = shift(s2);
  }

  const double largest = std::max(std::abs(shift1), std::abs(shift2));
  if (largest > 0 && std::abs(detuning) < 10.0 * largest)
    throw PreconditionViolated(
        "detuning must exceed the sigma_z rates by at least a factor of 10");

  report.rate_q1 = std::abs(shift1);
  report.rate_q2 = std::abs(shift2);
  report.differential_acz = shift2 - shift1;
  report.crosstalk = std::nullopt;
  report.notes += (report.notes.empty() ? "" : "; ");
  report.notes += "crosstalk unquantified: set by spectator phase tracking";
  report.validate();
  return report;
}

// Method IV: the ac Zeeman splitting separates the two qubit resonances
// and a single global drive addresses them spectrally.
inline MethodReport method_IV(const field::BasisSet& bases,
                              const field::DriveConfiguration& drive_gradient,
                              double drive_global_rate,
                              const trap::IonLayout& layout,
                              const hyperfine::LevelSet& levels,
                              const field::QuantizationAxis& axis,
                              const QubitPair& pair, double detuning,
                              std::optional<double> injected_splitting = {}) {
  double splitting = 0;
  if (injected_splitting) {
    splitting = *injected_splitting;
  } else {
    const MethodReport base = method_III(bases, drive_gradient, layout, levels,
                                         axis, pair, detuning);
    splitting = *base.differential_acz;
  }

  if (!(drive_global_rate < std::abs(splitting)))
    throw PreconditionViolated(
        "global Rabi rate must stay below the ac Zeeman splitting");

  MethodReport report;
  report.method = Method::IV;
  report.rate_q1 = drive_global_rate;
  report.rate_q2 = drive_global_rate;
  report.differential_acz = splitting;
  report.crosstalk = spin::flip_probability(drive_global_rate, splitting,
                                            units::pi / drive_global_rate);
  report.notes = "square-pulse off-resonant flip probability";
  report.validate();
  return report;
}

// ---------------------------------------------------------------------
// Comparison table (text + machine-readable JSON).
// ---------------------------------------------------------------------

inline nlohmann::json reports_to_json(const std::vector<MethodReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row;
    row["method"] = method_name(r.method);
    row["rate_q1_kHz"] = units::angular_to_khz(r.rate_q1);
    row["rate_q2_kHz"] = units::angular_to_khz(r.rate_q2);
    if (r.crosstalk)
      row["crosstalk"] = *r.crosstalk;
    else
      row["crosstalk"] = nullptr;
    if (r.differential_acz)
      row["differential_acz_kHz"] = units::angular_to_khz(*r.differential_acz);
    else
      row["differential_acz_kHz"] = nullptr;
    row["notes"] = r.notes;
    out.push_back(std::move(row));
  }
  return out;
}

inline std::vector<MethodReport> reports_from_json(const nlohmann::json& in) {
  std::vector<MethodReport> out;
  for (const auto& row : in) {
    MethodReport r;
    const std::string name = row.at("method").get<std::string>();
    if (name == "I") r.method = Method::I;
    else if (name == "II") r.method = Method::II;
    else if (name == "III") r.method = Method::III;
    else if (name == "IV") r.method = Method::IV;
    else throw ConfigError("unknown method name: " + name);
    r.rate_q1 = units::khz_to_angular(row.at("rate_q1_kHz").get<double>());
    r.rate_q2 = units::khz_to_angular(row.at("rate_q2_kHz").get<double>());
    if (!row.at("crosstalk").is_null())
      r.crosstalk = row.at("crosstalk").get<double>();
    if (!row.at("differential_acz_kHz").is_null())
      r.differential_acz =
          units::khz_to_angular(row.at("differential_acz_kHz").get<double>());
    r.notes = row.value("notes", "");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string table_comparison(const std::vector<MethodReport>& reports) {
  std::ostringstream os;
  os << "method  rate_q1/2pi(kHz)  rate_q2/2pi(kHz)  crosstalk(1e-3)  dacz/2pi(kHz)\n";
  for (const auto& r : reports) {
    char line[160];
    char xt[32], acz[32];
    if (r.crosstalk)
      std::snprintf(xt, sizeof xt, "%.3g", *r.crosstalk * 1e3);
    else
      std::snprintf(xt, sizeof xt, "--");
    if (r.differential_acz)
      std::snprintf(acz, sizeof acz, "%.4g",
                    units::angular_to_khz(*r.differential_acz));
    else
      std::snprintf(acz, sizeof acz, "--");
    std::snprintf(line, sizeof line, "%-6s  %16.4g  %16.4g  %15s  %13s\n",
                  method_name(r.method), units::angular_to_khz(r.rate_q1),
                  units::angular_to_khz(r.rate_q2), xt, acz);
    os << line;
  }
  return os.str();
}

} // namespace mwaddr::addressing
