#pragma once

// Surrogate-energy stabilization: the element energy of a piecewise-linear
// lift on the vertex-mean fan, minus the energy of the projected average
// state, both evaluated with blended effective Lame parameters. Vanishes
// identically on affine displacement fields and acts only on the projector
// residual. Residual and tangent are the exact first and second derivatives.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "vemstab/element.hpp"
#include "vemstab/geometry.hpp"
#include "vemstab/material.hpp"

namespace vemstab {

struct ClassicParams {
  double expansion_center = -0.25;  // center of the bounded lambda proxy
  double lambda_taylor = 0.0;       // degree-5 polynomial proxy for lambda(nu)
  double ellipse_aspect = 1.0;      // aspect of the min-area enclosing ellipse
  double shape_factor = 0.0;        // 2(1+nu)/aspect
  double blend = 0.0;               // shape_factor/(shape_factor+1), in (0,1)
  double incompressibility = 0.0;   // lambda_taylor / young
  double shear_eff = 0.0;           // (1+incompressibility)^2 * blend * mu
  double lambda_eff = 0.0;          // blend * lambda_taylor
};

inline ClassicParams classic_params(std::span<const Vec2> coords, const MaterialParams& mp) {
  ClassicParams cp;
  cp.lambda_taylor = taylor_lambda5(mp.young, mp.poisson);
  cp.ellipse_aspect = min_enclosing_ellipse(coords).aspect();
  cp.shape_factor = 2.0 * (1.0 + mp.poisson) / cp.ellipse_aspect;
  cp.blend = cp.shape_factor / (cp.shape_factor + 1.0);
  cp.incompressibility = cp.lambda_taylor / mp.young;
  cp.shear_eff = (1.0 + cp.incompressibility) * (1.0 + cp.incompressibility) * cp.blend * mp.mu;
  cp.lambda_eff = cp.blend * cp.lambda_taylor;
  return cp;
}

inline ClassicParams classic_params(const ElementOps& ops, const MaterialParams& mp) {
  return classic_params(std::span<const Vec2>(ops.coords), mp);
}

inline MaterialParams effective_material(const ClassicParams& cp) {
  MaterialParams mp;
  mp.mu = cp.shear_eff;
  mp.lambda = cp.lambda_eff;
  return mp;
}

namespace detail {

// 8-point Gauss-Legendre rule on [0, 1].
inline constexpr int kGauss8 = 8;
inline constexpr double kGauss8Node[kGauss8] = {
    0.5 * (1.0 - 0.9602898564975363), 0.5 * (1.0 - 0.7966664774136267),
    0.5 * (1.0 - 0.5255324099163290), 0.5 * (1.0 - 0.1834346424956498),
    0.5 * (1.0 + 0.1834346424956498), 0.5 * (1.0 + 0.5255324099163290),
    0.5 * (1.0 + 0.7966664774136267), 0.5 * (1.0 + 0.9602898564975363)};
inline constexpr double kGauss8Weight[kGauss8] = {
    0.5 * 0.1012285362903763, 0.5 * 0.2223810344533745, 0.5 * 0.3137066458778873,
    0.5 * 0.3626837833783620, 0.5 * 0.3626837833783620, 0.5 * 0.3137066458778873,
    0.5 * 0.2223810344533745, 0.5 * 0.1012285362903763};

// psi(F + D) - psi(F) - P(F):D via the integral form of the second-order
// remainder, which stays fully accurate when D is tiny relative to F (the
// direct difference would be swamped by cancellation).
inline double energy_increment_quadratic(const Mat2d& f, const Mat2d& d,
                                         const MaterialParams& mp) {
  double acc = 0.0;
  for (int q = 0; q < kGauss8; ++q) {
    const double t = kGauss8Node[q];
    const Mat2d a_d = tangent_apply(f + t * d, mp, d);
    acc += kGauss8Weight[q] * (1.0 - t) * a_d.cwiseProduct(d).sum();
  }
  return acc;
}

}  // namespace detail

// Stabilization energy: sum_T |T| (psi_eff(F_T) - psi_eff(F_E)). The two
// branches are analytically identical because the area-weighted fan gradients
// average to the element gradient exactly; the quadratic-remainder branch
// keeps the result accurate down to machine-zero for near-affine states.
inline double classic_energy(const ElementOps& ops, const Eigen::VectorXd& u,
                             const ClassicParams& cp) {
  const MaterialParams mp = effective_material(cp);
  const Mat2 f_e = average_deformation(ops, u);
  const double f_norm = f_e.norm();

  std::vector<Mat2> deltas(ops.fan.size());
  double max_delta = 0.0;
  for (std::size_t t = 0; t < ops.fan.size(); ++t) {
    const Eigen::Vector4d h = ops.fan[t].grad * u;
    Mat2 f_t;
    f_t << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
    deltas[t] = f_t - f_e;
    max_delta = std::max(max_delta, deltas[t].norm());
  }

  double energy = 0.0;
  if (max_delta <= 1e-4 * f_norm) {
    for (std::size_t t = 0; t < ops.fan.size(); ++t)
      energy += ops.fan[t].area * detail::energy_increment_quadratic(f_e, deltas[t], mp);
  } else {
    const double psi_e = energy_density(f_e, mp);
    for (std::size_t t = 0; t < ops.fan.size(); ++t)
      energy += ops.fan[t].area * (energy_density(f_e + deltas[t], mp) - psi_e);
  }
  return energy;
}

inline Eigen::VectorXd classic_residual(const ElementOps& ops, const Eigen::VectorXd& u,
                                        const ClassicParams& cp) {
  const MaterialParams mp = effective_material(cp);
  const Mat2 f_e = average_deformation(ops, u);
  Eigen::VectorXd res =
      -ops.metrics.area * (ops.grad_op.transpose() * vec2x2(first_pk(f_e, mp)));
  for (const FanTriangle& tri : ops.fan) {
    const Eigen::Vector4d h = tri.grad * u;
    Mat2 f_t;
    f_t << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
    res += tri.area * (tri.grad.transpose() * vec2x2(first_pk(f_t, mp)));
  }
  return res;
}

inline Eigen::MatrixXd classic_tangent(const ElementOps& ops, const Eigen::VectorXd& u,
                                       const ClassicParams& cp) {
  const MaterialParams mp = effective_material(cp);
  const Mat2 f_e = average_deformation(ops, u);
  Eigen::MatrixXd k = -ops.metrics.area * (ops.grad_op.transpose() *
                                           material_tangent(f_e, mp) * ops.grad_op);
  for (const FanTriangle& tri : ops.fan) {
    const Eigen::Vector4d h = tri.grad * u;
    Mat2 f_t;
    f_t << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
    k += tri.area * (tri.grad.transpose() * material_tangent(f_t, mp) * tri.grad);
  }
  return 0.5 * (k + k.transpose());
}

}  // namespace vemstab
