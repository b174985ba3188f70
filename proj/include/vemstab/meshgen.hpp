#pragma once

// Mesh generators: the four Cook's-membrane families (structured quads, two
// distorted variants, Lloyd-relaxed clipped Voronoi) and single-cell factories
// used by the element-level diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "vemstab/errors.hpp"
#include "vemstab/geometry.hpp"
#include "vemstab/mesh.hpp"
#include "vemstab/rng.hpp"

namespace vemstab {

// ---------------------------------------------------------------------------
// Cook's membrane domain: tapered panel (0,0)-(48,44)-(48,60)-(0,44),
// clamped on the left edge, loaded on the right edge.
// ---------------------------------------------------------------------------

inline const std::vector<Vec2>& cook_domain_polygon() {
  static const std::vector<Vec2> poly = {
      {0.0, 0.0}, {48.0, 44.0}, {48.0, 60.0}, {0.0, 44.0}};
  return poly;
}

// Bilinear-in-parameter map of the unit square onto the Cook trapezoid.
inline Vec2 cook_map(double s, double t) {
  return {48.0 * s, 44.0 * s + t * (44.0 - 28.0 * s)};
}

enum class CookFamily { quad, dist1, dist2, voronoi };

inline CookFamily cook_family_from_string(const std::string& s) {
  if (s == "quad") return CookFamily::quad;
  if (s == "dist1") return CookFamily::dist1;
  if (s == "dist2") return CookFamily::dist2;
  if (s == "voronoi") return CookFamily::voronoi;
  throw ConfigError("unknown mesh family: " + s);
}

struct CookOptions {
  int lloyd_iterations = 20;
  double dist1_amplitude = 0.15;  // fraction of the actual mesh size h*48
  double dist2_amplitude = 0.30;
  int voronoi_seed_count = -1;    // -1: derive from h
};

namespace detail {

// Structured node grid in parameter space, optionally perturbed, mapped to the
// trapezoid. Perturbations act on interior nodes only so every boundary vertex
// stays exactly on the trapezoid boundary.
inline PolyMesh cook_structured(int n, CookFamily family, std::uint64_t seed,
                                const CookOptions& opt) {
  PolyMesh mesh;
  std::mt19937_64 rng(seed);
  const double ds = 1.0 / n;
  mesh.vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      double s = i * ds;
      double t = j * ds;
      const bool interior = i > 0 && i < n && j > 0 && j < n;
      if (interior && family == CookFamily::dist1) {
        // Smooth low-frequency warp; distinct wavenumbers so neither component
        // degenerates on coarse grids.
        s += opt.dist1_amplitude * ds * std::sin(M_PI * s) * std::sin(M_PI * t);
        t += opt.dist1_amplitude * ds * std::sin(3.0 * M_PI * s) * std::sin(M_PI * t);
      } else if (interior && family == CookFamily::dist2) {
        // Strong jitter, applied in parameter space so the tapered right side
        // (cells only ~16/n tall) cannot fold over.
        s += uniform_pm(rng, opt.dist2_amplitude * ds);
        t += uniform_pm(rng, opt.dist2_amplitude * ds);
      }
      mesh.vertices.push_back(cook_map(s, t));
    }
  }
  auto node = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      PolygonCell cell;
      cell.vertex_ids = {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
      mesh.cells.push_back(std::move(cell));
    }
  }
  for (int j = 0; j < n; ++j) {
    mesh.boundary.push_back({node(0, j), node(0, j + 1), BoundaryTag::dirichlet});
    mesh.boundary.push_back({node(n, j), node(n, j + 1), BoundaryTag::neumann});
  }
  for (int i = 0; i < n; ++i) {
    mesh.boundary.push_back({node(i, 0), node(i + 1, 0), BoundaryTag::free_edge});
    mesh.boundary.push_back({node(i, n), node(i + 1, n), BoundaryTag::free_edge});
  }
  return mesh;
}

// Clip a convex polygon against the half-plane { x : normal . x <= offset }.
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& normal,
                                        double offset) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double da = normal.dot(a) - offset;
    const double db = normal.dot(b) - offset;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
      out.push_back(a + (da / (da - db)) * (b - a));
    }
  }
  return out;
}

// Voronoi cell of seeds[k] clipped to the (convex) domain polygon.
inline std::vector<Vec2> voronoi_cell(const std::vector<Vec2>& seeds, std::size_t k,
                                      const std::vector<Vec2>& domain) {
  std::vector<Vec2> cell = domain;
  for (std::size_t j = 0; j < seeds.size() && !cell.empty(); ++j) {
    if (j == k) continue;
    // Keep the side of the bisector closer to seed k.
    const Vec2 d = seeds[j] - seeds[k];
    const double offset = 0.5 * (seeds[j].squaredNorm() - seeds[k].squaredNorm());
    cell = clip_halfplane(cell, d, offset);
  }
  return cell;
}

inline PolyMesh cook_voronoi(double h, std::uint64_t seed, const CookOptions& opt) {
  const double h_act = 48.0 * h;
  int n_seeds = opt.voronoi_seed_count;
  if (n_seeds < 0)
    n_seeds = std::max(10, static_cast<int>(std::lround(1440.0 / (h_act * h_act))));

  // Jittered grid in parameter space, thinned evenly to the requested count.
  std::mt19937_64 rng(seed);
  const int rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_seeds)))));
  const int cols = (n_seeds + rows - 1) / rows;
  std::vector<Vec2> grid_pts;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const double s = (i + 0.5 + uniform_pm(rng, 0.3)) / cols;
      const double t = (j + 0.5 + uniform_pm(rng, 0.3)) / rows;
      grid_pts.push_back(cook_map(s, t));
    }
  }
  std::vector<Vec2> seeds;
  const std::size_t total = grid_pts.size();
  for (int k = 0; k < n_seeds; ++k)
    seeds.push_back(grid_pts[static_cast<std::size_t>(k) * total / n_seeds]);

  const std::vector<Vec2>& domain = cook_domain_polygon();
  for (int it = 0; it < opt.lloyd_iterations; ++it) {
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::vector<Vec2> cell = voronoi_cell(seeds, k, domain);
      if (cell.size() >= 3) seeds[k] = polygon_centroid(cell);
    }
  }

  // Final cells; merge coincident corners into a conforming vertex list.
  std::vector<std::vector<Vec2>> cells;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    std::vector<Vec2> cell = voronoi_cell(seeds, k, domain);
    if (cell.size() < 3)
      throw NumericalError("voronoi generation produced an empty cell", static_cast<int>(k));
    cells.push_back(std::move(cell));
  }

  struct Flat {
    Vec2 p;
    std::size_t cell, slot;
  };
  std::vector<Flat> flat;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (std::size_t s = 0; s < cells[c].size(); ++s) flat.push_back({cells[c][s], c, s});
  std::vector<std::size_t> order(flat.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (flat[a].p.x() != flat[b].p.x()) return flat[a].p.x() < flat[b].p.x();
    return flat[a].p.y() < flat[b].p.y();
  });
  const double tol = 1e-7;
  PolyMesh mesh;
  std::vector<int> vertex_of(flat.size(), -1);
  // Sweep in x; candidates for merging sit within `tol` in the sorted order.
  std::vector<std::size_t> window;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const Flat& f = flat[order[oi]];
    int found = -1;
    for (auto it = window.rbegin(); it != window.rend(); ++it) {
      const Flat& g = flat[*it];
      if (f.p.x() - g.p.x() > tol) break;
      if (std::abs(f.p.y() - g.p.y()) <= tol && (f.p - g.p).norm() <= tol) {
        found = vertex_of[*it];
        break;
      }
    }
    if (found < 0) {
      found = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(f.p);
    }
    vertex_of[order[oi]] = found;
    window.push_back(order[oi]);
    while (!window.empty() && f.p.x() - flat[window.front()].p.x() > tol)
      window.erase(window.begin());
  }
  std::vector<std::vector<int>> cell_ids(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) cell_ids[c].resize(cells[c].size());
  for (std::size_t fi = 0; fi < flat.size(); ++fi)
    cell_ids[flat[fi].cell][flat[fi].slot] = vertex_of[fi];
  for (auto& ids : cell_ids) {
    // Drop consecutive duplicates created by the merge.
    std::vector<int> cleaned;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (cleaned.empty() || ids[i] != cleaned.back()) cleaned.push_back(ids[i]);
    while (cleaned.size() > 1 && cleaned.front() == cleaned.back()) cleaned.pop_back();
    if (cleaned.size() < 3) throw NumericalError("voronoi cell collapsed during merge");
    mesh.cells.push_back({std::move(cleaned)});
  }

  // Boundary = single-incidence edges; classify by position on the trapezoid.
  std::map<std::pair<int, int>, int> incidence;
  for (const PolygonCell& cell : mesh.cells) {
    const std::size_t n = cell.vertex_ids.size();
    for (std::size_t i = 0; i < n; ++i)
      incidence[detail::edge_key(cell.vertex_ids[i], cell.vertex_ids[(i + 1) % n])]++;
  }
  for (const auto& [key, count] : incidence) {
    if (count != 1) continue;
    const Vec2& a = mesh.vertices[key.first];
    const Vec2& b = mesh.vertices[key.second];
    BoundaryTag tag = BoundaryTag::free_edge;
    if (std::abs(a.x()) < 1e-6 && std::abs(b.x()) < 1e-6) tag = BoundaryTag::dirichlet;
    if (std::abs(a.x() - 48.0) < 1e-6 && std::abs(b.x() - 48.0) < 1e-6) tag = BoundaryTag::neumann;
    mesh.boundary.push_back({key.first, key.second, tag});
  }
  return mesh;
}

}  // namespace detail

inline PolyMesh gen_cook(CookFamily family, double h, std::uint64_t seed = 1,
                         const CookOptions& opt = {}) {
  if (!(h > 0.0)) throw ConfigError("mesh size h must be positive");
  if (family == CookFamily::voronoi) {
    PolyMesh mesh = detail::cook_voronoi(h, seed, opt);
    validate_mesh(mesh);
    return mesh;
  }
  const double n_real = 1.0 / h;
  const int n = static_cast<int>(std::lround(n_real));
  if (n < 1 || std::abs(n_real - n) > 1e-9)
    throw ConfigError("structured families need h = 1/n for integer n");
  PolyMesh mesh = detail::cook_structured(n, family, seed, opt);
  validate_mesh(mesh);
  return mesh;
}

// ---------------------------------------------------------------------------
// Single-cell meshes for element-level studies.
// ---------------------------------------------------------------------------

inline PolyMesh single_cell_mesh(std::vector<Vec2> vertices) {
  PolyMesh mesh;
  mesh.vertices = std::move(vertices);
  PolygonCell cell;
  cell.vertex_ids.resize(mesh.vertices.size());
  std::iota(cell.vertex_ids.begin(), cell.vertex_ids.end(), 0);
  mesh.cells.push_back(std::move(cell));
  const int n = static_cast<int>(mesh.vertices.size());
  for (int i = 0; i < n; ++i)
    mesh.boundary.push_back({i, (i + 1) % n, BoundaryTag::free_edge});
  validate_mesh(mesh);
  return mesh;
}

inline PolyMesh unit_square_cell() {
  return single_cell_mesh({{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}});
}

inline PolyMesh rectangle_cell(double width, double height) {
  const double w = 0.5 * width, h = 0.5 * height;
  return single_cell_mesh({{-w, -h}, {w, -h}, {w, h}, {-w, h}});
}

inline PolyMesh regular_polygon_cell(int sides, double circumradius = 1.0) {
  if (sides < 3) throw ConfigError("regular polygon needs >= 3 sides");
  std::vector<Vec2> v;
  for (int k = 0; k < sides; ++k) {
    const double phi = 2.0 * M_PI * k / sides;
    v.emplace_back(circumradius * std::cos(phi), circumradius * std::sin(phi));
  }
  return single_cell_mesh(std::move(v));
}

// Non-convex L-shaped hexagon for the regularity checks.
inline PolyMesh l_hexagon_cell() {
  return single_cell_mesh(
      {{0.0, 0.0}, {2.0, 0.0}, {2.0, 1.0}, {1.0, 1.0}, {1.0, 2.0}, {0.0, 2.0}});
}

}  // namespace vemstab
