#pragma once

// Kernel-only stabilization split into a deviatoric part and a volumetric
// part, both built from the vertex residual r = (I - P) u:
//
//   s_dev = (mu_E |E| / h_E^2) R^T (I_N (x) W) R,  W = Q diag(tau1, tau2) Q^T,
//   s_vol = (kappa_E / h_E) sum_e |e| b_e b_e^T,   b_e^T = n_e^T avg(R rows),
//
// where Q is the principal frame of the vertex second-moment matrix and the
// weights tau1 = g, tau2 = 1/g come from the bounded anisotropy map
// g = min(aspect^beta, g_max). Both matrices annihilate affine dof vectors
// by construction and the resulting energy is an exact quadratic.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <utility>

#include "vemstab/element.hpp"
#include "vemstab/errors.hpp"
#include "vemstab/geometry.hpp"
#include "vemstab/material.hpp"

namespace vemstab {

struct FrameData {
  Mat2 second_moment = Mat2::Zero();
  Mat2 frame = Mat2::Identity();  // columns: major axis q1, minor axis q2
  double moment_major = 0.0;      // xi1 >= xi2 > 0
  double moment_minor = 0.0;
  double aspect = 1.0;  // sqrt(xi1 / xi2) >= 1
};

struct DecoupledConfig {
  double beta = 1.0;   // anisotropy exponent, in (0, 1]
  double g_max = 4.0;  // anisotropy cap, > 1
  enum class Kappa { zero, constant_value, capped } kappa_mode = Kappa::zero;
  double kappa_value = 0.0;  // for constant_value
  double kappa_cap = std::numeric_limits<double>::infinity();  // for capped

  void validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
    if (!(g_max > 1.0)) throw ConfigError("g_max must exceed 1");
    if (kappa_mode == Kappa::constant_value && !(kappa_value >= 0.0))
      throw ConfigError("kappa must be non-negative");
  }
};

// Default policy: drop the volumetric part near incompressibility (it would
// otherwise re-introduce a bulk-scaled coupling), use the bulk modulus below.
inline DecoupledConfig default_decoupled_config(const MaterialParams& mp) {
  DecoupledConfig cfg;
  if (mp.poisson >= 0.49) {
    cfg.kappa_mode = DecoupledConfig::Kappa::zero;
  } else {
    cfg.kappa_mode = DecoupledConfig::Kappa::constant_value;
    cfg.kappa_value = bulk_modulus(mp);
  }
  return cfg;
}

inline double kappa_for(const DecoupledConfig& cfg, const MaterialParams& mp) {
  switch (cfg.kappa_mode) {
    case DecoupledConfig::Kappa::zero:
      return 0.0;
    case DecoupledConfig::Kappa::constant_value:
      return cfg.kappa_value;
    case DecoupledConfig::Kappa::capped:
      return std::min(bulk_modulus(mp), cfg.kappa_cap);
  }
  return 0.0;
}

inline FrameData frame_data(std::span<const Vec2> coords) {
  Vec2 mean = Vec2::Zero();
  for (const Vec2& x : coords) mean += x;
  mean /= static_cast<double>(coords.size());

  FrameData fd;
  for (const Vec2& x : coords) {
    const Vec2 d = x - mean;
    fd.second_moment += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat2> eig(fd.second_moment);
  fd.moment_minor = eig.eigenvalues()(0);
  fd.moment_major = eig.eigenvalues()(1);
  if (!(fd.moment_minor > 1e-14 * fd.moment_major))
    throw NumericalError("degenerate (collinear) vertex distribution");
  Vec2 q1 = eig.eigenvectors().col(1);
  Vec2 q2 = eig.eigenvectors().col(0);
  // Deterministic signs: first nonzero component of each axis positive.
  auto fix_sign = [](Vec2& q) {
    const double lead = std::abs(q.x()) > 1e-14 ? q.x() : q.y();
    if (lead < 0.0) q = -q;
  };
  fix_sign(q1);
  fix_sign(q2);
  fd.frame.col(0) = q1;
  fd.frame.col(1) = q2;
  fd.aspect = std::sqrt(fd.moment_major / fd.moment_minor);
  return fd;
}

inline FrameData frame_data(const ElementOps& ops) {
  return frame_data(std::span<const Vec2>(ops.coords));
}

inline std::pair<double, double> anisotropy_weights(double aspect, const DecoupledConfig& cfg) {
  cfg.validate();
  const double g = std::min(std::pow(aspect, cfg.beta), cfg.g_max);
  return {g, 1.0 / g};
}

inline Mat2 anisotropy_matrix(const FrameData& fd, const DecoupledConfig& cfg) {
  const auto [tau1, tau2] = anisotropy_weights(fd.aspect, cfg);
  return tau1 * fd.frame.col(0) * fd.frame.col(0).transpose() +
         tau2 * fd.frame.col(1) * fd.frame.col(1).transpose();
}

inline Eigen::MatrixXd build_s_dev(const ElementOps& ops, const FrameData& fd, double mu_e,
                                   const DecoupledConfig& cfg) {
  if (!(mu_e > 0.0)) throw ConfigError("mu_E must be positive");
  const int n = ops.num_vertices;
  const Mat2 w = anisotropy_matrix(fd, cfg);
  Eigen::MatrixXd weighted(2 * n, 2 * n);  // (I_N (x) W) R
  for (int i = 0; i < n; ++i)
    weighted.middleRows(2 * i, 2) = w * ops.resid.middleRows(2 * i, 2);
  const double h = ops.metrics.diameter;
  Eigen::MatrixXd s =
      (mu_e * ops.metrics.area / (h * h)) * (ops.resid.transpose() * weighted);
  return 0.5 * (s + s.transpose());
}

// Row vector mapping dofs to the edge-averaged normal residual of edge i.
inline Eigen::RowVectorXd edge_normal_residual_row(const ElementOps& ops, int edge) {
  const int n = ops.num_vertices;
  const int j = (edge + 1) % n;
  const Vec2 nrm = ops.metrics.outward_normals[edge];
  return nrm.transpose() *
         (0.5 * (ops.resid.middleRows(2 * edge, 2) + ops.resid.middleRows(2 * j, 2)));
}

inline Eigen::MatrixXd build_s_vol(const ElementOps& ops, double kappa_e) {
  const int n = ops.num_vertices;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  if (kappa_e == 0.0) return s;
  if (!(kappa_e > 0.0)) throw ConfigError("kappa_E must be non-negative");
  for (int e = 0; e < n; ++e) {
    const Eigen::RowVectorXd b = edge_normal_residual_row(ops, e);
    s.noalias() += ops.metrics.edge_lengths[e] * (b.transpose() * b);
  }
  s *= kappa_e / ops.metrics.diameter;
  return s;
}

struct StabMatrices {
  Eigen::MatrixXd s_dev;
  Eigen::MatrixXd s_vol;
};

inline StabMatrices decoupled_matrices(const ElementOps& ops, const MaterialParams& mp,
                                       const DecoupledConfig& cfg) {
  StabMatrices m;
  m.s_dev = build_s_dev(ops, frame_data(ops), mp.mu, cfg);
  m.s_vol = build_s_vol(ops, kappa_for(cfg, mp));
  return m;
}

// Energy evaluated through the vertex residual: algebraically 1/2 u^T S u,
// but quadratic in r = (I - P) u so it collapses to machine zero on affine
// states instead of accumulating cancellation error.
inline double decoupled_energy(const ElementOps& ops, const Eigen::VectorXd& u,
                               const StabMatrices& m) {
  const Eigen::VectorXd r = ops.resid * u;
  return 0.5 * r.dot((m.s_dev + m.s_vol) * r);
}

inline Eigen::VectorXd decoupled_residual(const ElementOps& ops, const Eigen::VectorXd& u,
                                          const StabMatrices& m) {
  (void)ops;
  return (m.s_dev + m.s_vol) * u;
}

inline Eigen::MatrixXd decoupled_tangent(const ElementOps& ops, const Eigen::VectorXd& u,
                                         const StabMatrices& m) {
  (void)ops;
  (void)u;
  return m.s_dev + m.s_vol;
}

}  // namespace vemstab
