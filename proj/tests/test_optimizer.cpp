#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "mwaddr/optimizer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mwaddr;
using namespace mwaddr::design;
using fixtures::cd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const auto kLevels = hyperfine::diagonalize(hyperfine::mg25(), 21.3e-3);
const addressing::QubitPair kPair{kLevels.find(3, 1), kLevels.find(2, 1)};

field::BasisSet random_bases(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  field::BasisSet bases;
  for (size_t k = 0; k < 3; ++k) {
    bases[k].id = static_cast<field::Electrode>(k);
    bases[k].uniform << cd(1e-3 * u(rng), 1e-3 * u(rng)),
        cd(1e-3 * u(rng), 1e-3 * u(rng));
    const cd gxx(100 * u(rng), 100 * u(rng));
    const cd gxz(100 * u(rng), 100 * u(rng));
    bases[k].quadrupole << gxx, gxz, gxz, -gxx;
  }
  return bases;
}

DesignTarget on_axis_target(double gradient) {
  DesignTarget t;
  t.null_position = Eigen::Vector2d::Zero();
  t.gradient_target = gradient;
  t.gradient_direction = Eigen::Vector2d(0, 1);
  t.frequency = units::ghz_to_angular(1.687);
  return t;
}

} // namespace

TEST_CASE("decoupled design system matches the hand solution") {
  // one uniform electrode along x, two pure quadrupoles; z-axis
  // quantization makes the algebra solvable on paper
  const double b = 1e-3, gamma = 100.0, g = 7.1;
  const double x0 = 1e-6, z0 = -0.5e-6;

  field::BasisSet bases;
  bases[0].id = field::Electrode::MW1;
  bases[0].uniform << cd(b, 0), cd(0, 0);
  bases[1].id = field::Electrode::MW2;
  bases[1].quadrupole << cd(gamma, 0), cd(0, 0), cd(0, 0), cd(-gamma, 0);
  bases[2].id = field::Electrode::MW3;
  bases[2].quadrupole << cd(0, 0), cd(gamma, 0), cd(gamma, 0), cd(0, 0);

  DesignTarget target = on_axis_target(g);
  target.null_position = Eigen::Vector2d(x0, z0);
  const auto axis = field::QuantizationAxis::from_angle_deg(0.0);

  const auto drive = solve_currents(bases, axis, target);
  CHECK_THAT(std::real(drive.currents[0]),
             WithinRel(g * (x0 * x0 + z0 * z0) / (b * x0), 1e-12));
  CHECK_THAT(std::real(drive.currents[1]), WithinRel(-g / gamma, 1e-12));
  CHECK_THAT(std::real(drive.currents[2]), WithinRel(-g * z0 / (gamma * x0), 1e-12));
  for (const auto& c : drive.currents) CHECK(std::abs(std::imag(c)) < 1e-15);

  CHECK(field::field_at(bases, drive, target.null_position).norm() < 1e-12);
}

TEST_CASE("default fixture: null on axis with a 7.1 T/m parallel gradient") {
  const auto bases = fixtures::default_bases();
  const auto axis = fixtures::default_axis();
  const auto target = on_axis_target(7.1);

  const auto drive = solve_currents(bases, axis, target);
  CHECK(field::field_at(bases, drive, {0, 0}).norm() < 1e-12);

  const Eigen::Vector2cd grad = field::parallel_gradient(bases, drive, axis);
  const std::complex<double> directional = grad(1); // along +z
  CHECK_THAT(std::abs(directional), WithinRel(7.1, 1e-9));

  // gauge: first significant current is real positive; deterministic rerun
  CHECK(std::real(drive.currents[0]) > 0);
  CHECK(std::abs(std::imag(drive.currents[0])) < 1e-12 * std::abs(drive.currents[0]));
  const auto again = solve_currents(bases, axis, target);
  for (size_t k = 0; k < 3; ++k) CHECK(drive.currents[k] == again.currents[k]);

  // the null solves back to the target position
  CHECK(field::find_null(bases, drive).position.norm() < 1e-12);
}

TEST_CASE("random systems agree with the lattice + conjugate-gradient oracle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  int solved = 0;
  for (int trial = 0; trial < 60 && solved < 50; ++trial) {
    const field::BasisSet bases = random_bases(rng);
    DesignTarget target = on_axis_target(1.0 + 49.0 * (u(rng) + 1.0));
    target.null_position = Eigen::Vector2d(u(rng) * 1e-6, u(rng) * 1e-6);
    const double ang = u(rng) * units::pi;
    target.gradient_direction = Eigen::Vector2d(std::cos(ang), std::sin(ang));
    const auto axis = fixtures::default_axis();

    field::DriveConfiguration drive;
    try {
      drive = solve_currents(bases, axis, target);
    } catch (const ModelError&) {
      continue;
    }
    ++solved;

    // independent route: assemble the design equations from unit-current
    // field evaluations, seed on a lattice, refine by conjugate gradient
    Eigen::Matrix3cd m;
    Eigen::Vector3cd rhs(0, 0, target.gradient_target);
    for (int k = 0; k < 3; ++k) {
      field::DriveConfiguration unit;
      unit.currents = {0, 0, 0};
      unit.currents[static_cast<size_t>(k)] = 1.0;
      const Eigen::Vector2cd f = field::field_at(bases, unit, target.null_position);
      m(0, k) = f(0);
      m(1, k) = f(1);
      const Eigen::Vector2cd grad = field::parallel_gradient(bases, unit, axis);
      m(2, k) = grad(0) * target.gradient_direction(0) +
                grad(1) * target.gradient_direction(1);
    }
    Eigen::Vector3cd oracle_currents = oracle::descent_currents(m, rhs);

    // compare in a common gauge
    Eigen::Vector3cd mine(drive.currents[0], drive.currents[1], drive.currents[2]);
    for (int k = 0; k < 3; ++k) {
      if (std::abs(oracle_currents(k)) > 1e-12 * oracle_currents.norm()) {
        oracle_currents *=
            std::conj(oracle_currents(k)) / std::abs(oracle_currents(k));
        break;
      }
    }
    CHECK((mine - oracle_currents).norm() <= 1e-8 * mine.norm());

    // solve_currents followed by find_null recovers the target
    const auto null = field::find_null(bases, drive);
    CHECK((null.position - target.null_position).norm() < 1e-12);
  }
  CHECK(solved == 50);
}

TEST_CASE("singular and infeasible designs are diagnosed") {
  const auto axis = fixtures::default_axis();

  // all electrodes purely uniform: no gradient is reachable
  field::BasisSet uniform_only;
  for (size_t k = 0; k < 3; ++k) {
    uniform_only[k].id = static_cast<field::Electrode>(k);
    uniform_only[k].uniform << cd(1e-3 * (1.0 + k), 0), cd(-2e-3, 1e-4 * k);
  }
  CHECK_THROWS_AS(solve_currents(uniform_only, axis, on_axis_target(7.1)),
                  InfeasibleGradient);

  // two identical quadrupole electrodes: singular but consistent
  field::BasisSet degenerate;
  degenerate[0].id = field::Electrode::MW1;
  degenerate[0].uniform << cd(1e-3, 0), cd(2e-3, 0);
  degenerate[1].id = field::Electrode::MW2;
  degenerate[1].quadrupole << cd(100, 0), cd(10, 0), cd(10, 0), cd(-100, 0);
  degenerate[2] = degenerate[1];
  degenerate[2].id = field::Electrode::MW3;
  try {
    (void)solve_currents(degenerate, axis, on_axis_target(7.1));
    FAIL("expected a singular-system diagnosis");
  } catch (const SingularSystem& e) {
    CHECK(e.condition_number > 1e10);
  } catch (const InfeasibleGradient&) {
    // also acceptable only if the uniform rows block the solution, which
    // this fixture is built to avoid
    FAIL("expected SingularSystem, got InfeasibleGradient");
  }

  DesignTarget bad = on_axis_target(7.1);
  bad.gradient_target = 500.0;
  CHECK_THROWS_AS(solve_currents(fixtures::default_bases(), axis, bad), ConfigError);
}

TEST_CASE("sensitivity: zero errors, linear scaling, reproducibility") {
  const auto bases = fixtures::default_bases();
  const auto axis = fixtures::default_axis();
  const auto drive = solve_currents(bases, axis, on_axis_target(7.1));
  const Eigen::Vector2d null_pos(0, 0);

  const auto clean = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                                 0.0, 0.0, 200, 7);
  const double nominal =
      std::abs(field::sample(bases, drive, axis, null_pos).parallel_amplitude);
  CHECK(clean.residual_parallel_median == nominal);
  CHECK(clean.residual_parallel_p90 == nominal);
  CHECK(nominal < 1e-15);

  // median residual scales linearly with the error level (log-log slope 1)
  std::vector<double> eps = {1e-4, 3.16e-4, 1e-3};
  std::vector<double> medians;
  for (double e : eps)
    medians.push_back(sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                                  e, e, 1000, 99)
                          .residual_parallel_median);
  const double slope = std::log(medians.back() / medians.front()) /
                       std::log(eps.back() / eps.front());
  CHECK_THAT(slope, WithinAbs(1.0, 0.1));

  // quantiles are ordered and reproducible bit-for-bit under a fixed seed
  const auto a = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                             1e-3, 1e-3, 500, 1234);
  const auto b = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                             1e-3, 1e-3, 500, 1234);
  CHECK(a.residual_parallel_median == b.residual_parallel_median);
  CHECK(a.residual_parallel_p90 == b.residual_parallel_p90);
  CHECK(a.spectator_rate_median == b.spectator_rate_median);
  CHECK(a.residual_parallel_p90 >= a.residual_parallel_median);
  CHECK(a.spectator_rate_p90 >= a.spectator_rate_median);

  const auto c = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                             1e-3, 1e-3, 500, 1235);
  CHECK(a.residual_parallel_median != c.residual_parallel_median);

  CHECK_THROWS_AS(sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                              1e-3, 1e-3, 50, 1),
                  PreconditionViolated);

  // implied spectator rate is the qubit matrix element applied to the
  // median residual field
  const double rate_per_tesla =
      constants::mu_bohr / constants::hbar *
      std::abs(kLevels.parallel_element(kPair.down, kPair.up));
  CHECK_THAT(a.spectator_rate_median,
             WithinRel(rate_per_tesla * a.residual_parallel_median, 1e-12));
}

TEST_CASE("error level calibrated to the mapped residual field floor") {
  const auto bases = fixtures::default_bases();
  const auto axis = fixtures::default_axis();
  const auto drive = solve_currents(bases, axis, on_axis_target(7.1));
  const Eigen::Vector2d null_pos(0, 0);

  // linear scaling lets one pilot run set the error level that reproduces
  // the 0.14 uT residual observed in the pi-time map
  const auto pilot = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                                 1e-3, 1e-3, 1000, 42);
  const double scale = 0.14e-6 / pilot.residual_parallel_median;
  const auto tuned = sensitivity(bases, axis, drive, null_pos, kLevels, kPair,
                                 1e-3 * scale, 1e-3 * scale, 1000, 42);
  CHECK_THAT(tuned.residual_parallel_median, WithinRel(0.14e-6, 0.05));

  // the implied spectator rate then follows the physical matrix element
  const double rate_per_tesla =
      constants::mu_bohr / constants::hbar *
      std::abs(kLevels.parallel_element(kPair.down, kPair.up));
  CHECK_THAT(tuned.spectator_rate_median,
             WithinRel(rate_per_tesla * tuned.residual_parallel_median, 1e-12));
}

TEST_CASE("offset sweep: measured point, degenerate origin, monotonicity") {
  const auto bases = fixtures::default_bases();
  const auto axis = fixtures::default_axis();
  const auto trap_params = fixtures::default_trap();

  // imperfect null tuned so the 350 nm rate ratio matches the measured
  // 0.32/12.84 contrast
  const double grad = 7.1;
  const double ratio = 0.32 / 12.84;
  const double residual_par = grad * 350e-9 * ratio / (1.0 - ratio);
  const double cos15 = std::cos(units::deg_to_rad(15.0));
  auto target = on_axis_target(grad);
  target.frequency =
      hyperfine::transition_frequency(kLevels, kPair.down, kPair.up);
  const auto drive =
      solve_currents(bases, axis, target,
                     Eigen::Vector2cd(0.0, residual_par / cos15));

  std::vector<double> offsets = {350e-9, 500e-9, 650e-9, 800e-9, 1000e-9};
  const auto swept = offset_sweep(bases, drive, kLevels, trap_params, axis,
                                  kPair, {0, 1}, offsets);
  CHECK_THAT(swept.rows[0].crosstalk, WithinAbs(1.5e-3, 0.2e-3));
  CHECK(swept.crosstalk_monotone_decreasing);

  // zero offset: identical rates, a pi pulse flips both ions
  const auto degenerate = offset_sweep(bases, drive, kLevels, trap_params, axis,
                                       kPair, {0, 1}, {0.0});
  CHECK_THAT(degenerate.rows[0].crosstalk, WithinAbs(1.0, 1e-9));
  CHECK_THAT(degenerate.rows[0].rate_addressed,
             WithinRel(degenerate.rows[0].rate_spectator, 1e-9));

  CHECK_THROWS_AS(offset_sweep(bases, drive, kLevels, trap_params, axis, kPair,
                               {0, 1}, {5e-6}),
                  PreconditionViolated);
}
