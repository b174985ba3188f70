#pragma once

// Per-element operators for the lowest-order polygonal element with vertex
// displacement dofs (vertex-major ordering: u_x0, u_y0, u_x1, u_y1, ...):
//
//  * grad_op G (4 x 2N): dofs -> vec of the element-average displacement
//    gradient, computed from the boundary edge midpoints.
//  * proj P (2N x 2N): dofs -> vertex values of the affine field with that
//    average gradient whose vertex mean matches the dof vertex mean. P is
//    idempotent with rank 6; resid R = I - P.
//  * kernel Z (2N x (2N-6)): orthonormal basis of ker(P) = range(R).
//  * fan: triangulation against the vertex-mean point. Each triangle carries
//    its area and a matrix B (4 x 2N) giving vec of the linear interpolant's
//    gradient on that triangle; the apex value is the dof vertex mean.
//    The fan satisfies sum_T |T| B_T = |E| G exactly.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <numeric>
#include <span>
#include <vector>

#include "vemstab/errors.hpp"
#include "vemstab/geometry.hpp"
#include "vemstab/mesh.hpp"

namespace vemstab {

struct FanTriangle {
  double area = 0.0;
  Eigen::MatrixXd grad;  // 4 x 2N, rows ordered (xx, xy, yx, yy)
};

struct ElementOps {
  std::vector<Vec2> coords;
  CellMetrics metrics;
  int num_vertices = 0;

  Vec2 vertex_mean = Vec2::Zero();
  Eigen::Matrix2Xd cvec;    // 2 x N: gradient weights, H = sum_i u_i cvec_i^T
  Eigen::MatrixXd grad_op;  // 4 x 2N
  Eigen::MatrixXd proj;     // 2N x 2N
  Eigen::MatrixXd resid;    // 2N x 2N, I - proj
  Eigen::MatrixXd kernel;   // 2N x (2N - 6), orthonormal columns

  std::vector<FanTriangle> fan;

  int dofs() const { return 2 * num_vertices; }
};

namespace detail {

// Gradient rows of the P1 interpolant on triangle (p0, p1, p2) with CCW
// orientation: grad phi_k = perp(p_{k+1} - p_{k+2}) / (2 area), where
// perp(v) = (-v.y, v.x) rotated to point away from the opposite edge.
inline void p1_gradients(const Vec2& p0, const Vec2& p1, const Vec2& p2, double area,
                         Vec2 grad[3]) {
  const double inv = 1.0 / (2.0 * area);
  grad[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) * inv;
  grad[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) * inv;
  grad[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) * inv;
}

}  // namespace detail

inline ElementOps element_ops(std::vector<Vec2> coords) {
  ElementOps ops;
  {
    PolygonCell cell;
    cell.vertex_ids.resize(coords.size());
    std::iota(cell.vertex_ids.begin(), cell.vertex_ids.end(), 0);
    ops.metrics = polygon_metrics(cell, coords);
  }
  ops.coords = std::move(coords);
  const int n = static_cast<int>(ops.coords.size());
  ops.num_vertices = n;
  const double area = ops.metrics.area;

  for (const Vec2& x : ops.coords) ops.vertex_mean += x;
  ops.vertex_mean /= static_cast<double>(n);

  // Edge-midpoint boundary integration of u (x) n gives the average gradient:
  // H = sum_i u_i cvec_i^T with cvec_i combining the two edges at vertex i.
  ops.cvec.resize(2, n);
  for (int i = 0; i < n; ++i) {
    const int prev = (i + n - 1) % n;
    const Vec2 contrib = ops.metrics.edge_lengths[prev] * ops.metrics.outward_normals[prev] +
                         ops.metrics.edge_lengths[i] * ops.metrics.outward_normals[i];
    ops.cvec.col(i) = contrib / (2.0 * area);
  }

  ops.grad_op = Eigen::MatrixXd::Zero(4, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) ops.grad_op(2 * a + b, 2 * i + a) = ops.cvec(b, i);

  // Affine reconstruction at the vertices: (Pu)_j = H (x_j - xbar) + ubar.
  Eigen::MatrixXd proj_scalar(n, n);
  for (int j = 0; j < n; ++j) {
    const Vec2 d = ops.coords[j] - ops.vertex_mean;
    for (int i = 0; i < n; ++i)
      proj_scalar(j, i) = 1.0 / n + d.dot(ops.cvec.col(i));
  }
  ops.proj = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < 2; ++a) ops.proj(2 * j + a, 2 * i + a) = proj_scalar(j, i);
  ops.resid = Eigen::MatrixXd::Identity(2 * n, 2 * n) - ops.proj;

  // ker(P) from the right singular vectors of P at (numerically) zero
  // singular value. Rank of P is 6 for any non-degenerate polygon.
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ops.proj, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > tol) ++rank;
    if (rank != std::min(6, 2 * n))
      throw NumericalError("projector rank " + std::to_string(rank) + " on a polygon with " +
                           std::to_string(n) + " vertices");
    ops.kernel = svd.matrixV().rightCols(2 * n - rank);
  }

  // Fan about the vertex-mean point, with the apex value of the
  // piecewise-linear lift set to the dof vertex mean. With that pairing the
  // lift reproduces affine fields exactly (the apex sits where an affine
  // function attains the mean of its vertex values), so every dof contributes
  // grad phi_apex / n on each triangle.
  const Vec2 center = ops.vertex_mean;
  ops.fan.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    FanTriangle tri;
    const Vec2& pi = ops.coords[i];
    const Vec2& pj = ops.coords[j];
    tri.area = 0.5 * ((pi.x() - center.x()) * (pj.y() - center.y()) -
                      (pj.x() - center.x()) * (pi.y() - center.y()));
    if (!(tri.area > 0.0))
      throw NumericalError("fan triangulation produced a non-positive triangle; polygon is " +
                           std::string("not star-shaped with respect to its vertex mean"));
    Vec2 grad[3];
    detail::p1_gradients(center, pi, pj, tri.area, grad);
    Eigen::Matrix2Xd scalar = Eigen::Matrix2Xd::Zero(2, n);
    for (int v = 0; v < n; ++v) scalar.col(v) = grad[0] / static_cast<double>(n);
    scalar.col(i) += grad[1];
    scalar.col(j) += grad[2];
    tri.grad = Eigen::MatrixXd::Zero(4, 2 * n);
    for (int v = 0; v < n; ++v)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) tri.grad(2 * a + b, 2 * v + a) = scalar(b, v);
    ops.fan.push_back(std::move(tri));
  }

  return ops;
}

inline ElementOps element_ops(const PolyMesh& mesh, int cell) {
  return element_ops(cell_coords(mesh.cells[cell], mesh.vertices));
}

// Convenience for the single-cell meshes produced by the cell factories.
inline ElementOps element_ops(const PolyMesh& mesh) {
  if (mesh.cells.size() != 1)
    throw ConfigError("element_ops(mesh) expects a single-cell mesh");
  return element_ops(mesh, 0);
}

// Average deformation gradient F = I + unvec(G u) for a dof vector u.
inline Mat2 average_deformation(const ElementOps& ops, const Eigen::VectorXd& u) {
  const Eigen::Vector4d h = ops.grad_op * u;
  Mat2 f;
  f << 1.0 + h(0), h(1), h(2), 1.0 + h(3);
  return f;
}

}  // namespace vemstab
