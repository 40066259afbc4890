#pragma once

// Independent oracles used by the test suite only.  Each one deliberately
// avoids the code path of the implementation it checks: the hyperfine
// oracle builds the Hamiltonian from explicit ladder-operator formulas and
// diagonalizes it with hand-rolled cyclic Jacobi rotations; the two-level
// oracle integrates the Schroedinger equation with an adaptive stepper;
// the null and current oracles minimize directly.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <complex>
#include <vector>

#include "mwaddr/constants.hpp"
#include "mwaddr/fieldmodel.hpp"
#include "mwaddr/hyperfine.hpp"
#include "mwaddr/spindynamics.hpp"

namespace oracle {

// ---------------------------------------------------------------------
// Hyperfine: H = A I.J + (mu_B/hbar) B (gJ Jz + gI Iz) in the product
// basis |m_I, m_J>, built element-by-element (real symmetric).
// ---------------------------------------------------------------------

struct HyperfineOracle {
  std::vector<double> energies;           // ascending
  std::vector<std::vector<double>> vecs;  // vecs[k] = eigenvector of energies[k]
  std::vector<double> m_parallel_diag;    // gJ mJ + gI mI per basis state
  int dim = 0;
  int dimJ = 0;
  double I = 0, J = 0;
};

// Cyclic Jacobi eigensolver for a real symmetric matrix.
inline void jacobi_eigensolve(std::vector<std::vector<double>>& a,
                              std::vector<double>& w,
                              std::vector<std::vector<double>>& v) {
  const int n = static_cast<int>(a.size());
  v.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  w.resize(n);
  for (int i = 0; i < n; ++i) w[static_cast<size_t>(i)] = a[i][i];
}

inline HyperfineOracle solve_hyperfine(const mwaddr::hyperfine::AtomParameters& atom,
                                       double B) {
  using mwaddr::constants::hbar;
  using mwaddr::constants::mu_bohr;
  const double I = atom.nuclear_spin, J = atom.electron_spin;
  const int dI = static_cast<int>(std::lround(2 * I + 1));
  const int dJ = static_cast<int>(std::lround(2 * J + 1));
  const int n = dI * dJ;
  const double A = atom.hyperfine_constant;
  const double gJ = atom.electronic_g_factor, gI = atom.nuclear_g_factor;

  auto mI_of = [&](int p) { return -I + p / dJ; };
  auto mJ_of = [&](int p) { return -J + p % dJ; };

  std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
  for (int p = 0; p < n; ++p) {
    const double mI = mI_of(p), mJ = mJ_of(p);
    h[p][p] = A * mI * mJ + (mu_bohr / hbar) * B * (gJ * mJ + gI * mI);
    // <mI+1, mJ-1| A (I+ J-)/2 |mI, mJ>
    if (p / dJ + 1 < dI && p % dJ - 1 >= 0) {
      const int q = (p / dJ + 1) * dJ + (p % dJ - 1);
      const double c = 0.5 * A * std::sqrt((I - mI) * (I + mI + 1)) *
                       std::sqrt((J + mJ) * (J - mJ + 1));
      h[q][p] += c;
      h[p][q] += c;
    }
  }

  HyperfineOracle out;
  out.dim = n;
  out.dimJ = dJ;
  out.I = I;
  out.J = J;
  out.m_parallel_diag.resize(n);
  for (int p = 0; p < n; ++p)
    out.m_parallel_diag[static_cast<size_t>(p)] = gJ * mJ_of(p) + gI * mI_of(p);

  std::vector<double> w;
  std::vector<std::vector<double>> v;
  jacobi_eigensolve(h, w, v);

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return w[static_cast<size_t>(x)] < w[static_cast<size_t>(y)];
  });

  out.energies.resize(n);
  out.vecs.assign(n, std::vector<double>(n));
  for (int k = 0; k < n; ++k) {
    out.energies[static_cast<size_t>(k)] = w[static_cast<size_t>(order[static_cast<size_t>(k)])];
    for (int r = 0; r < n; ++r)
      out.vecs[static_cast<size_t>(k)][static_cast<size_t>(r)] =
          v[static_cast<size_t>(r)][static_cast<size_t>(order[static_cast<size_t>(k)])];
  }
  return out;
}

// |<a| gJ Jz + gI Iz |b>| between two oracle eigenvectors.
inline double parallel_element(const HyperfineOracle& o, int a, int b) {
  double sum = 0;
  for (int p = 0; p < o.dim; ++p)
    sum += o.vecs[static_cast<size_t>(a)][static_cast<size_t>(p)] *
           o.m_parallel_diag[static_cast<size_t>(p)] *
           o.vecs[static_cast<size_t>(b)][static_cast<size_t>(p)];
  return std::abs(sum);
}

// ---------------------------------------------------------------------
// Two-level Schroedinger integration (adaptive Dormand-Prince).
// ---------------------------------------------------------------------

inline mwaddr::spin::QubitState integrate_pulse(const mwaddr::spin::QubitState& start,
                                                const mwaddr::spin::PulseParams& p,
                                                double tolerance = 1e-12) {
  namespace odeint = boost::numeric::odeint;
  using state_type = std::vector<std::complex<double>>;

  const std::complex<double> i(0, 1);
  auto rhs = [&](const state_type& psi, state_type& dpsi, double) {
    const std::complex<double> off =
        0.5 * p.rabi_rate * std::exp(-i * p.drive_phase);
    dpsi[0] = -i * (0.5 * p.detuning * psi[0] + off * psi[1]);
    dpsi[1] = -i * (std::conj(off) * psi[0] - 0.5 * p.detuning * psi[1]);
  };

  state_type psi{start.amplitude_down, start.amplitude_up};
  if (p.duration > 0) {
    auto stepper = odeint::make_controlled<
        odeint::runge_kutta_dopri5<state_type>>(tolerance, tolerance);
    odeint::integrate_adaptive(stepper, rhs, psi, 0.0, p.duration,
                               p.duration / 1000.0);
  }
  return {psi[0], psi[1]};
}

inline double state_fidelity(const mwaddr::spin::QubitState& x,
                             const mwaddr::spin::QubitState& y) {
  const std::complex<double> ov = std::conj(x.amplitude_down) * y.amplitude_down +
                                  std::conj(x.amplitude_up) * y.amplitude_up;
  return std::norm(ov);
}

// ---------------------------------------------------------------------
// Field-null grid search + compass-descent refinement.
// ---------------------------------------------------------------------

inline Eigen::Vector2d grid_descent_null(const mwaddr::field::BasisSet& bases,
                                         const mwaddr::field::DriveConfiguration& drive,
                                         double half_extent = 3e-6, int n = 400) {
  auto cost = [&](const Eigen::Vector2d& r) {
    return mwaddr::field::field_at(bases, drive, r).squaredNorm();
  };

  Eigen::Vector2d best(0, 0);
  double best_cost = cost(best);
  for (int ix = 0; ix < n; ++ix) {
    for (int iz = 0; iz < n; ++iz) {
      const Eigen::Vector2d r(-half_extent + 2 * half_extent * ix / (n - 1),
                              -half_extent + 2 * half_extent * iz / (n - 1));
      const double c = cost(r);
      if (c < best_cost) {
        best_cost = c;
        best = r;
      }
    }
  }

  double step = 2 * half_extent / (n - 1);
  while (step > 1e-14) {
    bool moved = false;
    for (const auto& d : {Eigen::Vector2d(step, 0), Eigen::Vector2d(-step, 0),
                          Eigen::Vector2d(0, step), Eigen::Vector2d(0, -step)}) {
      const Eigen::Vector2d r = best + d;
      const double c = cost(r);
      if (c < best_cost) {
        best_cost = c;
        best = r;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

// ---------------------------------------------------------------------
// Least-squares current design: coarse lattice seed + conjugate-gradient
// descent on || M I - b ||^2 over the 3 complex currents.
// ---------------------------------------------------------------------

inline Eigen::Vector3cd descent_currents(const Eigen::Matrix3cd& m_raw,
                                         const Eigen::Vector3cd& b_raw) {
  // row equilibration: preserves the solution of the consistent square
  // system while keeping the quadratic well conditioned for descent
  Eigen::Matrix3cd m = m_raw;
  Eigen::Vector3cd b = b_raw;
  for (int r = 0; r < 3; ++r) {
    const double scale = m.row(r).norm();
    if (scale > 0) {
      m.row(r) /= scale;
      b(r) /= scale;
    }
  }
  auto cost = [&](const Eigen::Vector3cd& x) { return (m * x - b).squaredNorm(); };

  // lattice seed over a box scaled to the problem
  const double scale =
      b.norm() / std::max(1e-300, m.cwiseAbs().maxCoeff());
  Eigen::Vector3cd best = Eigen::Vector3cd::Zero();
  double best_cost = cost(best);
  const std::array<double, 3> ticks{-scale, 0.0, scale};
  for (double re0 : ticks)
    for (double im0 : ticks)
      for (double re1 : ticks)
        for (double im1 : ticks)
          for (double re2 : ticks)
            for (double im2 : ticks) {
              Eigen::Vector3cd x;
              x << std::complex<double>(re0, im0), std::complex<double>(re1, im1),
                  std::complex<double>(re2, im2);
              const double c = cost(x);
              if (c < best_cost) {
                best_cost = c;
                best = x;
              }
            }

  // conjugate gradient on the (Hermitian positive-definite) normal system,
  // restarted a few times to polish through rounding
  const Eigen::Matrix3cd a = m.adjoint() * m;
  const Eigen::Vector3cd rhs = m.adjoint() * b;
  Eigen::Vector3cd x = best;
  for (int restart = 0; restart < 6; ++restart) {
    Eigen::Vector3cd r = rhs - a * x;
    Eigen::Vector3cd p = r;
    double rs = r.squaredNorm();
    for (int it = 0; it < 12 && rs > 1e-300; ++it) {
      const Eigen::Vector3cd ap = a * p;
      const double denom = std::real(p.dot(ap));
      if (denom <= 0) break;
      const double alpha = rs / denom;
      x += alpha * p;
      r -= alpha * ap;
      const double rs_new = r.squaredNorm();
      p = r + (rs_new / rs) * p;
      rs = rs_new;
    }
  }
  return x;
}

} // namespace oracle
