#pragma once

// Spectral and equivalence diagnostics for the stabilization operators:
//  * full and kernel-restricted eigenvalue reports,
//  * generalized eigenvalue bounds of a stabilization against a reference
//    quadratic form (symmetric whitening),
//  * deterministic kernel-mode construction with a volume-deviation check
//    and a Poisson-ratio sweep of both stabilization energies,
//  * boundary-seminorm equivalence (double-integral seminorm vs. scaled
//    squared edge differences),
//  * vertex-sum vs. harmonic-seminorm equivalence via a refined
//    piecewise-linear Laplace solve on the fan triangulation.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "vemstab/assembly.hpp"
#include "vemstab/element.hpp"
#include "vemstab/errors.hpp"
#include "vemstab/material.hpp"
#include "vemstab/rng.hpp"
#include "vemstab/stab_classic.hpp"
#include "vemstab/stab_decoupled.hpp"

namespace vemstab {

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

struct SpectralReport {
  Eigen::VectorXd full_eigenvalues;        // ascending, of the 2N x 2N matrix
  int zero_count = 0;                      // eigenvalues < 1e-10 * max
  Eigen::VectorXd kernel_eigenvalues;      // ascending, of Z^T S Z
  Eigen::MatrixXd kernel_eigenvectors;     // columns, matching order
  double condition_number = 0.0;           // kernel max / kernel min
  bool has_generalized = false;
  Eigen::VectorXd generalized_eigenvalues; // ascending, S vs. target on kernel
  double c0 = 0.0;                         // min generalized eigenvalue
  double c1 = 0.0;                         // max generalized eigenvalue
};

struct EquivalenceBounds {
  double c0 = 0.0;
  double c1 = 0.0;
  Eigen::VectorXd generalized;  // ascending
};

// Generalized eigenvalues of s w = lambda target w via symmetric whitening
// target^{-1/2} s target^{-1/2}; target must be SPD.
inline EquivalenceBounds equivalence_bounds(const Eigen::MatrixXd& s_kernel,
                                            const Eigen::MatrixXd& target_kernel) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> te(target_kernel);
  const Eigen::VectorXd tv = te.eigenvalues();
  if (!(tv.minCoeff() > 1e-12 * std::max(tv.maxCoeff(), 0.0)))
    throw NumericalError("equivalence target is not positive definite");
  const Eigen::MatrixXd inv_sqrt = te.eigenvectors() *
                                   tv.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   te.eigenvectors().transpose();
  Eigen::MatrixXd white = inv_sqrt * s_kernel * inv_sqrt;
  white = 0.5 * (white + white.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> we(white);
  EquivalenceBounds out;
  out.generalized = we.eigenvalues();
  out.c0 = out.generalized.minCoeff();
  out.c1 = out.generalized.maxCoeff();
  return out;
}

// Stabilization matrix of the selected backend at the reference state u = 0.
inline Eigen::MatrixXd stabilization_matrix(const ElementOps& ops, const MaterialParams& mp,
                                            StabBackend backend,
                                            const DecoupledConfig& cfg = DecoupledConfig{}) {
  if (backend == StabBackend::decoupled) {
    const StabMatrices m = decoupled_matrices(ops, mp, cfg);
    return m.s_dev + m.s_vol;
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(ops.dofs());
  return classic_tangent(ops, zero, classic_params(ops, mp));
}

inline SpectralReport kernel_spectrum(const ElementOps& ops, const Eigen::MatrixXd& s_full,
                                      const Eigen::MatrixXd* target_kernel = nullptr) {
  SpectralReport rep;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(0.5 * (s_full + s_full.transpose()));
  rep.full_eigenvalues = full.eigenvalues();
  const double top = rep.full_eigenvalues.cwiseAbs().maxCoeff();
  for (int i = 0; i < rep.full_eigenvalues.size(); ++i)
    if (std::abs(rep.full_eigenvalues(i)) < 1e-10 * top) ++rep.zero_count;

  const Eigen::MatrixXd s_ker = ops.kernel.transpose() * s_full * ops.kernel;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ker(0.5 * (s_ker + s_ker.transpose()));
  rep.kernel_eigenvalues = ker.eigenvalues();
  rep.kernel_eigenvectors = ker.eigenvectors();
  if (rep.kernel_eigenvalues.size() > 0 && rep.kernel_eigenvalues.minCoeff() > 0.0)
    rep.condition_number = rep.kernel_eigenvalues.maxCoeff() / rep.kernel_eigenvalues.minCoeff();

  if (target_kernel != nullptr) {
    const EquivalenceBounds eb = equivalence_bounds(s_ker, *target_kernel);
    rep.has_generalized = true;
    rep.generalized_eigenvalues = eb.generalized;
    rep.c0 = eb.c0;
    rep.c1 = eb.c1;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reference quadratic forms on the kernel
// ---------------------------------------------------------------------------

// Full nonlinear energy of the fan extension: sum_T |T| psi(F_T).
inline double fan_extension_energy(const ElementOps& ops, const Eigen::VectorXd& u,
                                   const MaterialParams& mp) {
  double acc = 0.0;
  for (const FanTriangle& tri : ops.fan) {
    const Eigen::Vector4d h = tri.grad * u;
    Mat2 f;
    f << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
    acc += tri.area * energy_density(f, mp);
  }
  return acc;
}

// Kernel-restricted exact Hessian of the fan-extension energy at a state u:
// K* = Z^T (sum_T |T| B_T^T A(F_T) B_T) Z.
inline Eigen::MatrixXd surrogate_tangent_kernel(const ElementOps& ops, const Eigen::VectorXd& u,
                                                const MaterialParams& mp) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ops.dofs(), ops.dofs());
  for (const FanTriangle& tri : ops.fan) {
    const Eigen::Vector4d h = tri.grad * u;
    Mat2 f;
    f << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
    k += tri.area * (tri.grad.transpose() * material_tangent(f, mp) * tri.grad);
  }
  Eigen::MatrixXd out = ops.kernel.transpose() * k * ops.kernel;
  return 0.5 * (out + out.transpose());
}

// mu-scaled H1 Gram matrix of the fan extension, restricted to the kernel:
// a shear-only reference form with no volumetric (lambda) content, so it
// stays commensurate with deviatoric stabilizations for any Poisson ratio.
inline Eigen::MatrixXd shear_gram_kernel(const ElementOps& ops, double mu) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ops.dofs(), ops.dofs());
  for (const FanTriangle& tri : ops.fan)
    g += tri.area * (tri.grad.transpose() * tri.grad);
  Eigen::MatrixXd out = mu * (ops.kernel.transpose() * g * ops.kernel);
  return 0.5 * (out + out.transpose());
}

// H1 seminorm (squared) of the fan extension of a dof vector.
inline double fan_h1_seminorm_sq(const ElementOps& ops, const Eigen::VectorXd& u) {
  double acc = 0.0;
  for (const FanTriangle& tri : ops.fan) acc += tri.area * (tri.grad * u).squaredNorm();
  return acc;
}

// ---------------------------------------------------------------------------
// Kernel-mode construction and Poisson-ratio sweep
// ---------------------------------------------------------------------------

struct KernelModeSweepRow {
  double poisson = 0.0;
  double classic_raw = 0.0;
  double dec_raw = 0.0;
  double classic_over_mu = 0.0;      // classic_raw / (mu * amplitude^2)
  double dec_over_mu = 0.0;          // dec_raw / (mu * amplitude^2)
  double classic_over_mu_eff = 0.0;  // classic_raw / (shear_eff * amplitude^2)
};

struct KernelModeDiag {
  Eigen::VectorXd mode;  // unit-norm kernel vector
  double projector_residual_ratio = 0.0;
  double max_volume_deviation = 0.0;  // max_T |det F_T - 1| at the amplitude
  double amplitude = 1e-2;
  std::uint64_t seed_used = 0;
  std::vector<KernelModeSweepRow> sweep;
};

inline std::vector<double> standard_poisson_sweep() {
  return {0.3, 0.4, 0.45, 0.49, 0.499, 0.4999};
}

inline std::vector<MaterialParams> sweep_materials(double young,
                                                   const std::vector<double>& poissons) {
  std::vector<MaterialParams> out;
  out.reserve(poissons.size());
  for (double nu : poissons) out.push_back(lame_from(young, nu));
  return out;
}

// Draw a random vector, strip its affine part with (I - P), normalize, and
// accept it once the per-triangle volume deviation at the probe amplitude is
// below the threshold (retrying with consecutive seeds otherwise). The sweep
// evaluates both stabilization energies at u = amplitude * mode for each
// material; the volumetric weight follows the default near-incompressibility
// policy with the base config's anisotropy knobs.
inline KernelModeDiag isochoric_kernel_mode(const ElementOps& ops, std::uint64_t seed,
                                            const std::vector<MaterialParams>& materials,
                                            const DecoupledConfig& base = DecoupledConfig{},
                                            double iso_threshold = 2e-2, double amplitude = 1e-2,
                                            int max_retries = 64) {
  if (ops.kernel.cols() == 0) throw ConfigError("cell has an empty stabilization kernel");
  KernelModeDiag diag;
  diag.amplitude = amplitude;

  for (int attempt = 0;; ++attempt) {
    if (attempt >= max_retries)
      throw NumericalError("no sampled kernel mode met the volume-deviation threshold");
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    std::mt19937_64 rng(s);
    Eigen::VectorXd v(ops.dofs());
    for (int i = 0; i < v.size(); ++i) v(i) = uniform_pm(rng, 1.0);
    Eigen::VectorXd mode = ops.resid * v;
    const double norm = mode.norm();
    if (norm < 1e-8) continue;
    mode /= norm;

    double max_dev = 0.0;
    for (const FanTriangle& tri : ops.fan) {
      const Eigen::Vector4d h = amplitude * (tri.grad * mode);
      const double det = (1.0 + h(0)) * (1.0 + h(3)) - h(1) * h(2);
      max_dev = std::max(max_dev, std::abs(det - 1.0));
    }
    if (max_dev >= iso_threshold) continue;

    diag.mode = mode;
    diag.seed_used = s;
    diag.max_volume_deviation = max_dev;
    diag.projector_residual_ratio = (ops.proj * mode).norm();
    break;
  }

  const Eigen::VectorXd u = diag.amplitude * diag.mode;
  const double a2 = diag.amplitude * diag.amplitude;
  for (const MaterialParams& mp : materials) {
    KernelModeSweepRow row;
    row.poisson = mp.poisson;
    const ClassicParams cp = classic_params(ops, mp);
    row.classic_raw = classic_energy(ops, u, cp);

    DecoupledConfig cfg = default_decoupled_config(mp);
    cfg.beta = base.beta;
    cfg.g_max = base.g_max;
    row.dec_raw = decoupled_energy(ops, u, decoupled_matrices(ops, mp, cfg));

    row.classic_over_mu = row.classic_raw / (mp.mu * a2);
    row.dec_over_mu = row.dec_raw / (mp.mu * a2);
    row.classic_over_mu_eff = row.classic_raw / (cp.shear_eff * a2);
    diag.sweep.push_back(row);
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Boundary-seminorm equivalence
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kGauss16 = 16;
inline constexpr double kGauss16Abscissa[kGauss16 / 2] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr double kGauss16Weight[kGauss16 / 2] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

inline void gauss16_on_unit(double node[kGauss16], double weight[kGauss16]) {
  for (int i = 0; i < kGauss16 / 2; ++i) {
    node[2 * i] = 0.5 * (1.0 - kGauss16Abscissa[i]);
    node[2 * i + 1] = 0.5 * (1.0 + kGauss16Abscissa[i]);
    weight[2 * i] = weight[2 * i + 1] = 0.5 * kGauss16Weight[i];
  }
}

}  // namespace detail

// Double-integral boundary seminorm of the piecewise-linear trace with nodal
// values g: same-edge blocks contribute (g_{i+1} - g_i)^2 exactly (the
// integrand is constant there); distinct-edge blocks use tensor Gauss.
inline double boundary_seminorm_sq(std::span<const Vec2> coords, const Eigen::VectorXd& g) {
  const int n = static_cast<int>(coords.size());
  double node[detail::kGauss16], weight[detail::kGauss16];
  detail::gauss16_on_unit(node, weight);

  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dg = g((i + 1) % n) - g(i);
    acc += dg * dg;
  }
  for (int i = 0; i < n; ++i) {
    const Vec2& ai = coords[i];
    const Vec2 ei = coords[(i + 1) % n] - ai;
    const double li = ei.norm();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec2& aj = coords[j];
      const Vec2 ej = coords[(j + 1) % n] - aj;
      const double lj = ej.norm();
      double block = 0.0;
      for (int q = 0; q < detail::kGauss16; ++q) {
        const Vec2 x = ai + node[q] * ei;
        const double gx = g(i) * (1.0 - node[q]) + g((i + 1) % n) * node[q];
        for (int r = 0; r < detail::kGauss16; ++r) {
          const Vec2 y = aj + node[r] * ej;
          const double gy = g(j) * (1.0 - node[r]) + g((j + 1) % n) * node[r];
          const double dist2 = (x - y).squaredNorm();
          block += weight[q] * weight[r] * (gx - gy) * (gx - gy) / dist2;
        }
      }
      acc += li * lj * block;
    }
  }
  return acc;
}

// Scaled edge-difference form: h_E * sum_i (g_{i+1} - g_i)^2 / |e_i|.
inline double edge_difference_form(std::span<const Vec2> coords, const Eigen::VectorXd& g,
                                   double h_e) {
  const int n = static_cast<int>(coords.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dg = g((i + 1) % n) - g(i);
    acc += dg * dg / (coords[(i + 1) % n] - coords[i]).norm();
  }
  return h_e * acc;
}

// Ratio interval of the two boundary forms over random nodal traces.
inline std::pair<double, double> h12_equivalence_check(std::span<const Vec2> coords,
                                                       int n_samples, std::uint64_t seed = 7) {
  const double h_e = polygon_diameter(coords);
  const int n = static_cast<int>(coords.size());
  std::mt19937_64 rng(seed);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g(i) = uniform_pm(rng, 1.0);
    const double denom = edge_difference_form(coords, g, h_e);
    if (denom < 1e-14) continue;  // (near-)constant trace: both sides vanish
    const double ratio = boundary_seminorm_sq(coords, g) / denom;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (!(hi > 0.0)) throw NumericalError("all sampled traces were constant");
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Vertex-sum vs. harmonic seminorm (refined Laplace oracle)
// ---------------------------------------------------------------------------

struct TriMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
};

inline TriMesh fan_tri_mesh(const ElementOps& ops) {
  TriMesh m;
  m.nodes.push_back(ops.vertex_mean);
  m.nodes.insert(m.nodes.end(), ops.coords.begin(), ops.coords.end());
  const int n = ops.num_vertices;
  for (int i = 0; i < n; ++i)
    m.tris.push_back({0, 1 + i, 1 + (i + 1) % n});
  return m;
}

inline TriMesh refine_uniform(const TriMesh& in) {
  TriMesh out;
  out.nodes = in.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(0.5 * (in.nodes[a] + in.nodes[b]));
    midpoint.emplace(key, id);
    return id;
  };
  for (const auto& t : in.tris) {
    const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
    out.tris.push_back({t[0], ab, ca});
    out.tris.push_back({ab, t[1], bc});
    out.tris.push_back({ca, bc, t[2]});
    out.tris.push_back({ab, bc, ca});
  }
  return out;
}

// Gram matrix of the H1 inner products between the discrete harmonic
// extensions of the piecewise-linear boundary traces of the given dof
// vectors (one per column), computed on the fan triangulation refined
// `levels` times. One Laplace factorization serves every column and both
// displacement components.
inline Eigen::MatrixXd harmonic_extension_gram(const ElementOps& ops,
                                               const Eigen::MatrixXd& dofs, int levels = 3) {
  TriMesh mesh = fan_tri_mesh(ops);
  for (int l = 0; l < levels; ++l) mesh = refine_uniform(mesh);
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  const int n_poly = ops.num_vertices;
  const int n_cols = static_cast<int>(dofs.cols());
  const int n_fields = 2 * n_cols;  // x and y component per dof vector
  const double tol = 1e-9 * ops.metrics.diameter;

  // Boundary classification + boundary values by arclength interpolation.
  std::vector<int> is_boundary(n_nodes, 0);
  Eigen::MatrixXd bvalue = Eigen::MatrixXd::Zero(n_nodes, n_fields);
  for (int v = 0; v < n_nodes; ++v) {
    for (int e = 0; e < n_poly; ++e) {
      const Vec2& a = ops.coords[e];
      const Vec2& b = ops.coords[(e + 1) % n_poly];
      if (point_segment_distance(mesh.nodes[v], a, b) < tol) {
        const Vec2 d = b - a;
        const double t = std::clamp((mesh.nodes[v] - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
        is_boundary[v] = 1;
        for (int c = 0; c < n_cols; ++c) {
          bvalue.block<1, 2>(v, 2 * c) =
              ((1.0 - t) * dofs.col(c).segment<2>(2 * e) +
               t * dofs.col(c).segment<2>(2 * ((e + 1) % n_poly)))
                  .transpose();
        }
        break;
      }
    }
  }

  std::vector<int> free_id(n_nodes, -1);
  int n_free = 0;
  for (int v = 0; v < n_nodes; ++v)
    if (!is_boundary[v]) free_id[v] = n_free++;

  // P1 stiffness (shared by all fields).
  std::vector<Eigen::Triplet<double>> kff_t;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_free, n_fields);
  std::vector<std::array<Vec2, 3>> grads(mesh.tris.size());
  std::vector<double> areas(mesh.tris.size());
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& tri = mesh.tris[t];
    const Vec2 &p0 = mesh.nodes[tri[0]], &p1 = mesh.nodes[tri[1]], &p2 = mesh.nodes[tri[2]];
    const double area =
        0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y()));
    if (!(area > 0.0)) throw NumericalError("refined fan triangle is degenerate");
    areas[t] = area;
    Vec2 g[3];
    detail::p1_gradients(p0, p1, p2, area, g);
    grads[t] = {g[0], g[1], g[2]};
    for (int i = 0; i < 3; ++i) {
      if (free_id[tri[i]] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double kij = area * g[i].dot(g[j]);
        if (free_id[tri[j]] >= 0)
          kff_t.emplace_back(free_id[tri[i]], free_id[tri[j]], kij);
        else
          rhs.row(free_id[tri[i]]) -= kij * bvalue.row(tri[j]);
      }
    }
  }

  Eigen::MatrixXd values = bvalue;
  if (n_free > 0) {
    Eigen::SparseMatrix<double> kff(n_free, n_free);
    kff.setFromTriplets(kff_t.begin(), kff_t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(kff);
    if (chol.info() != Eigen::Success)
      throw NumericalError("interior Laplace factorization failed");
    const Eigen::MatrixXd sol = chol.solve(rhs);
    for (int v = 0; v < n_nodes; ++v)
      if (free_id[v] >= 0) values.row(v) = sol.row(free_id[v]);
  }

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_cols, n_cols);
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& tri = mesh.tris[t];
    Eigen::MatrixXd gmat = Eigen::MatrixXd::Zero(2, n_fields);
    for (int i = 0; i < 3; ++i) gmat += grads[t][i] * values.row(tri[i]);
    for (int a = 0; a < n_cols; ++a)
      for (int b = a; b < n_cols; ++b) {
        const double dot = gmat.col(2 * a).dot(gmat.col(2 * b)) +
                           gmat.col(2 * a + 1).dot(gmat.col(2 * b + 1));
        gram(a, b) += areas[t] * dot;
      }
  }
  gram = gram.selfadjointView<Eigen::Upper>();
  return gram;
}

// H1 seminorm (squared) of the discrete harmonic extension of the
// piecewise-linear boundary trace of a dof vector.
inline double harmonic_h1_seminorm_sq(const ElementOps& ops, const Eigen::VectorXd& u,
                                      int levels = 3) {
  return harmonic_extension_gram(ops, u, levels)(0, 0);
}

// Ratio interval of (|E|/h^2) sum_i |w(x_i)|^2 against the harmonic-extension
// H1 seminorm over the whole stabilization kernel. Both sides are invariant
// under uniform rescaling of the polygon (the area factor keeps the vertex
// sum dimensionless, matching the scale-invariant H1 seminorm). The interval
// comes from the eigenvalues of the seminorm's Gram matrix on the orthonormal
// kernel basis: those bound the Rayleigh quotient over every kernel field, so
// the result does not depend on which basis the SVD happened to return.
inline std::pair<double, double> poincare_korn_check(const ElementOps& ops,
                                                    int refinement_levels = 3) {
  if (ops.kernel.cols() == 0) throw ConfigError("cell has an empty stabilization kernel");
  const double h2 = ops.metrics.diameter * ops.metrics.diameter;
  const Eigen::MatrixXd gram = harmonic_extension_gram(ops, ops.kernel, refinement_levels);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lo_q = es.eigenvalues().minCoeff();
  const double hi_q = es.eigenvalues().maxCoeff();
  if (!(lo_q > 0.0)) throw NumericalError("harmonic extension has zero seminorm");
  const double scale = ops.metrics.area / h2;  // vertex sum of any unit-norm kernel field
  return {scale / hi_q, scale / lo_q};
}

}  // namespace vemstab
