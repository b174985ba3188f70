#pragma once

// Small 2D computational-geometry kit used by the mesh and element layers:
// polygon measures (shoelace area, area centroid, diameter), point/segment
// predicates, and the minimum-area enclosing ellipse of a point set.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace vemstab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Signed polygon area by the shoelace formula; positive for CCW ordering.
inline double polygon_signed_area(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

// Area centroid of a simple polygon (not the vertex average).
inline Vec2 polygon_centroid(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  double twice = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    const double cross = a.x() * b.y() - b.x() * a.y();
    twice += cross;
    c += cross * (a + b);
  }
  if (twice == 0.0) throw std::invalid_argument("polygon_centroid: zero-area polygon");
  return c / (3.0 * twice);
}

// Maximum pairwise vertex distance.
inline double polygon_diameter(std::span<const Vec2> v) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      d2 = std::max(d2, (v[i] - v[j]).squaredNorm());
  return std::sqrt(d2);
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Even-odd rule point-in-polygon test; boundary points may land either way,
// which is acceptable for the report-only uses below.
inline bool point_in_polygon(const Vec2& p, std::span<const Vec2> v) {
  bool inside = false;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const bool straddles = (v[i].y() > p.y()) != (v[j].y() > p.y());
    if (straddles) {
      const double x_cross =
          v[j].x() + (p.y() - v[j].y()) / (v[i].y() - v[j].y()) * (v[i].x() - v[j].x());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

// Radius of the largest ball centered at `center` contained in the polygon:
// distance from the center to the boundary, or 0 if the center lies outside.
inline double centered_inscribed_radius(const Vec2& center, std::span<const Vec2> v) {
  if (!point_in_polygon(center, v)) return 0.0;
  double r = std::numeric_limits<double>::infinity();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    r = std::min(r, point_segment_distance(center, v[i], v[(i + 1) % n]));
  return r;
}

// Proper-crossing test for open segments (shared endpoints do not count).
inline bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

// A simple polygon has no proper crossing between non-adjacent edges.
inline bool polygon_is_simple(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Minimum-area (Loewner-John) ellipse of a point set,
// { x : (x-c)^T A (x-c) <= 1 } with A symmetric positive definite.
struct Ellipse {
  Vec2 center;
  Mat2 shape;        // the matrix A above
  double r_major;    // larger semi-axis
  double r_minor;    // smaller semi-axis
  double aspect() const { return r_major / r_minor; }
};

// Khachiyan barycentric ascent with Todd-Yildirim away steps (the away steps
// restore linear convergence, so a 1e-9 duality tolerance is cheap even for
// support sets where plain Frank-Wolfe crawls). Points are centered/scaled
// before iterating so the tolerance is relative to the cloud size.
inline Ellipse min_enclosing_ellipse(std::span<const Vec2> pts, double tol = 1e-9,
                                     int max_iter = 200000) {
  const int m = static_cast<int>(pts.size());
  if (m < 3) throw std::invalid_argument("min_enclosing_ellipse: need at least 3 points");

  Vec2 shift = Vec2::Zero();
  for (const Vec2& p : pts) shift += p;
  shift /= m;
  double scale = 0.0;
  for (const Vec2& p : pts) scale = std::max(scale, (p - shift).norm());
  if (scale == 0.0) throw std::invalid_argument("min_enclosing_ellipse: coincident points");

  // Lifted points q_i = (x_i, y_i, 1) in the scaled frame.
  Eigen::Matrix3Xd q(3, m);
  for (int i = 0; i < m; ++i) {
    q.col(i) << (pts[i] - shift) / scale, 1.0;
  }

  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
  Eigen::VectorXd mvals(m);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::Matrix3d x = Eigen::Matrix3d::Zero();
    for (int i = 0; i < m; ++i) x.noalias() += u[i] * q.col(i) * q.col(i).transpose();
    Eigen::Matrix3d xinv;
    {
      Eigen::FullPivLU<Eigen::Matrix3d> lu(x);
      if (!lu.isInvertible())
        throw std::runtime_error("min_enclosing_ellipse: degenerate (collinear) point set");
      xinv = lu.inverse();
    }
    for (int i = 0; i < m; ++i) mvals[i] = q.col(i).dot(xinv * q.col(i));

    int j_add = 0;
    double m_add = mvals.maxCoeff(&j_add);
    int j_away = -1;
    double m_away = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (u[i] > 1e-12 && mvals[i] < m_away) {
        m_away = mvals[i];
        j_away = i;
      }
    }

    const double gap_add = m_add - 3.0;
    const double gap_away = 3.0 - m_away;
    if (std::max(gap_add, gap_away) <= 3.0 * tol) break;

    if (gap_add >= gap_away) {
      const double step = gap_add / (3.0 * (m_add - 1.0));
      u *= (1.0 - step);
      u[j_add] += step;
    } else {
      // Move away from the least-violating support point; clip to feasibility.
      double step = gap_away / (3.0 * (m_away - 1.0));
      if (!(m_away > 1.0)) step = std::numeric_limits<double>::infinity();
      step = std::min(step, u[j_away] / (1.0 - u[j_away]));
      u *= (1.0 + step);
      u[j_away] -= step;
      if (u[j_away] < 0.0) u[j_away] = 0.0;
    }
  }

  Vec2 c = Vec2::Zero();
  for (int i = 0; i < m; ++i) c += u[i] * (pts[i] - shift);
  Mat2 second = Mat2::Zero();
  for (int i = 0; i < m; ++i) {
    const Vec2 d = (pts[i] - shift) - c;
    second.noalias() += u[i] * d * d.transpose();
  }
  // In d dimensions the optimal ellipse is (x-c)^T [(1/d)(sum u dd^T)]^{-1} (x-c) <= 1.
  // c and second are in the shifted (unscaled) frame, so the shape carries over.
  Ellipse e;
  e.center = shift + c;
  e.shape = (2.0 * second).inverse();
  Eigen::SelfAdjointEigenSolver<Mat2> es(e.shape);
  if (es.eigenvalues()(0) <= 0.0)
    throw std::runtime_error("min_enclosing_ellipse: indefinite shape matrix");
  // Semi-axis lengths are inverse square roots of the shape eigenvalues.
  e.r_major = 1.0 / std::sqrt(es.eigenvalues()(0));
  e.r_minor = 1.0 / std::sqrt(es.eigenvalues()(1));
  return e;
}

}  // namespace vemstab
