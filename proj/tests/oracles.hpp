#pragma once

// Independent reference computations. Nothing here calls into the library
// except for the plain ComplexStructure container.

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "hfq/pointwise.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;

// det [[I, conj(mu_x)], [mu_y, I]] as a full 2n x 2n determinant
inline cplx block_det(const MatrixXcd& mu_x, const MatrixXcd& mu_y) {
  const auto n = mu_x.rows();
  MatrixXcd m(2 * n, 2 * n);
  m << MatrixXcd::Identity(n, n), mu_x.conjugate(), mu_y, MatrixXcd::Identity(n, n);
  return m.fullPivLu().determinant();
}

inline cplx psi(const MatrixXcd& a, const MatrixXcd& b) { return block_det(a, a) / block_det(a, b); }

inline cplx zeta(const MatrixXcd& a, const MatrixXcd& b, const MatrixXcd& c) {
  return block_det(a, b) * block_det(b, c) / (block_det(a, c) * block_det(b, b));
}

// coefficient of (theta^x_1 ^ ... ^ theta^x_n) ^ conj(theta^y_1 ^ ... ^ theta^y_n)
// where the (1,0)-forms of mu are the rows of [I, mu] in (dz, dzbar) coordinates
inline cplx wedge(const MatrixXcd& mu_x, const MatrixXcd& mu_y) {
  const auto n = mu_x.rows();
  MatrixXcd rows(2 * n, 2 * n);
  rows.topLeftCorner(n, n).setIdentity();
  rows.topRightCorner(n, n) = mu_x;
  rows.bottomLeftCorner(n, n) = mu_y.conjugate();
  rows.bottomRightCorner(n, n).setIdentity();
  return rows.fullPivLu().determinant();
}

// |<Psi_ab e_a, e_b>_b - <e_a, Psi_ba e_b>_a| from the wedge-product definitions
inline double adjoint_defect(const MatrixXcd& a, const MatrixXcd& b) {
  const MatrixXcd o = MatrixXcd::Zero(a.rows(), a.cols());
  const double unit = wedge(o, o).real();
  // Psi(alpha) ^ conj(beta) = alpha ^ conj(beta) for beta in the source line
  const cplx p_ab = wedge(a, a) / wedge(b, a);
  const cplx p_ba = wedge(b, b) / wedge(a, b);
  const cplx lhs = p_ab * wedge(b, b) / unit;
  const cplx rhs = std::conj(p_ba) * wedge(a, a) / unit;
  return std::abs(lhs - rhs);
}

inline MatrixXcd scalar(cplx v) {
  MatrixXcd m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace oracle
