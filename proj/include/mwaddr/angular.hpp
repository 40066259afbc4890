#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

// Angular-momentum operator matrices in the |j, m> basis with m ascending
// (m = -j ... +j).  Dimensionless (units of hbar).

namespace mwaddr::angular {

inline int dimension(double j) {
  const int d = static_cast<int>(std::lround(2.0 * j + 1.0));
  if (d < 1 || std::abs(2.0 * j - std::lround(2.0 * j)) > 1e-12)
    throw std::invalid_argument("angular momentum must be a non-negative half-integer");
  return d;
}

inline double m_value(double j, int index) { return -j + index; }

inline Eigen::MatrixXcd jz(double j) {
  const int d = dimension(j);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k < d; ++k) out(k, k) = m_value(j, k);
  return out;
}

inline Eigen::MatrixXcd jplus(double j) {
  const int d = dimension(j);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int k = 0; k + 1 < d; ++k) {
    const double m = m_value(j, k);
    out(k + 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  return out;
}

inline Eigen::MatrixXcd jminus(double j) { return jplus(j).adjoint(); }

inline Eigen::MatrixXcd jx(double j) {
  return 0.5 * (jplus(j) + jminus(j));
}

inline Eigen::MatrixXcd jy(double j) {
  return std::complex<double>(0, -0.5) * (jplus(j) - jminus(j));
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k)
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

} // namespace mwaddr::angular
