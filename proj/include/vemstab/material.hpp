#pragma once

// Plane-strain compressible neo-Hookean material:
//   psi(F) = mu/2 (tr(F^T F) - 2 ln J - 2) + lambda/2 (ln J)^2,  J = det F,
// with first Piola-Kirchhoff stress and the full four-index tangent, stored
// as a 4x4 matrix acting on vec(H) = (H00, H01, H10, H11).

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "vemstab/errors.hpp"

namespace vemstab {

using Mat2d = Eigen::Matrix2d;
using Tangent4 = Eigen::Matrix4d;

struct MaterialParams {
  double mu = 0.0;
  double lambda = 0.0;
  double young = 0.0;
  double poisson = 0.0;
};

inline MaterialParams lame_from(double young, double poisson) {
  if (!(young > 0.0)) throw ConfigError("Young modulus must be positive");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw ConfigError("Poisson ratio must lie in (-1, 0.5)");
  MaterialParams p;
  p.young = young;
  p.poisson = poisson;
  p.mu = young / (2.0 * (1.0 + poisson));
  p.lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  return p;
}

// Construct from (mu, nu), e.g. the Cook benchmark's mu=40, nu=0.499.
inline MaterialParams params_from_mu_poisson(double mu, double poisson) {
  if (!(mu > 0.0)) throw ConfigError("shear modulus must be positive");
  return lame_from(2.0 * mu * (1.0 + poisson), poisson);
}

inline double bulk_modulus(const MaterialParams& p) { return p.lambda + 2.0 * p.mu / 3.0; }

inline Eigen::Vector4d vec2x2(const Mat2d& m) {
  return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)};
}

inline Mat2d unvec2x2(const Eigen::Vector4d& v) {
  Mat2d m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

inline double det_or_throw(const Mat2d& f, int cell_id = -1) {
  const double j = f.determinant();
  if (!(j > 0.0))
    throw NumericalError("inverted element: det F = " + std::to_string(j) +
                             (cell_id >= 0 ? " in cell " + std::to_string(cell_id) : ""),
                         cell_id);
  return j;
}

inline double energy_density(const Mat2d& f, const MaterialParams& p) {
  const double j = det_or_throw(f);
  const double log_j = std::log(j);
  const double i1 = f.squaredNorm();  // tr(F^T F)
  return 0.5 * p.mu * (i1 - 2.0 * log_j - 2.0) + 0.5 * p.lambda * log_j * log_j;
}

inline Mat2d first_pk(const Mat2d& f, const MaterialParams& p) {
  const double j = det_or_throw(f);
  const Mat2d f_inv_t = f.inverse().transpose();
  return p.mu * (f - f_inv_t) + p.lambda * std::log(j) * f_inv_t;
}

// Directional derivative of the stress: A[H] = dP(F + tH)/dt at t=0.
inline Mat2d tangent_apply(const Mat2d& f, const MaterialParams& p, const Mat2d& h) {
  const double j = det_or_throw(f);
  const Mat2d f_inv = f.inverse();
  const Mat2d f_inv_t = f_inv.transpose();
  return p.mu * h + (p.mu - p.lambda * std::log(j)) * f_inv_t * h.transpose() * f_inv_t +
         p.lambda * (f_inv * h).trace() * f_inv_t;
}

// Full tangent as a 4x4 matrix on vec(H); has major symmetry A = A^T.
inline Tangent4 material_tangent(const Mat2d& f, const MaterialParams& p) {
  Tangent4 a;
  for (int col = 0; col < 4; ++col) {
    Eigen::Vector4d basis = Eigen::Vector4d::Zero();
    basis(col) = 1.0;
    a.col(col) = vec2x2(tangent_apply(f, p, unvec2x2(basis)));
  }
  return a;
}

// Degree-5 Taylor expansion of nu -> lambda(nu) about nu0 = -1/4, used by the
// classical stabilization as a bounded volumetric proxy. The exact partial
// fraction split lambda/E = -1/(3(1+nu)) + 1/(3(1-2nu)) gives rational
// coefficients c_k for powers of (nu + 1/4):
//   c_k = -2^(2k+1)/3^(k+2) (k even),  2^(2k+1)/3^(k+1) (k odd).
inline double taylor_lambda5(double young, double poisson) {
  static constexpr double coeff[6] = {
      -2.0 / 9.0, 8.0 / 9.0, -32.0 / 81.0, 128.0 / 81.0, -512.0 / 729.0, 2048.0 / 729.0};
  const double x = poisson + 0.25;
  double acc = 0.0;
  for (int k = 5; k >= 0; --k) acc = acc * x + coeff[k];
  return young * acc;
}

}  // namespace vemstab
