#pragma once

// Polygonal mesh data model: cells as CCW vertex loops, per-cell geometric
// metrics, mesh-wide regularity auditing, and JSON serialization.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vemstab/errors.hpp"
#include "vemstab/geometry.hpp"

namespace vemstab {

struct PolygonCell {
  std::vector<int> vertex_ids;  // CCW order, no repeated closing vertex
};

enum class BoundaryTag { dirichlet, neumann, free_edge };

inline std::string to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::dirichlet: return "dirichlet";
    case BoundaryTag::neumann: return "neumann";
    case BoundaryTag::free_edge: return "free";
  }
  return "free";
}

inline BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "dirichlet") return BoundaryTag::dirichlet;
  if (s == "neumann") return BoundaryTag::neumann;
  if (s == "free") return BoundaryTag::free_edge;
  throw ConfigError("unknown boundary tag: " + s);
}

struct BoundaryEdge {
  int a = -1;  // endpoints as vertex indices
  int b = -1;
  BoundaryTag tag = BoundaryTag::free_edge;
};

struct PolyMesh {
  std::vector<Vec2> vertices;
  std::vector<PolygonCell> cells;
  std::vector<BoundaryEdge> boundary;
};

struct CellMetrics {
  double area = 0.0;
  double diameter = 0.0;
  Vec2 centroid = Vec2::Zero();                // area centroid
  std::vector<double> edge_lengths;            // edge i runs v_i -> v_{i+1}
  std::vector<Vec2> outward_normals;           // unit, outward for CCW cells
};

struct RegularityReport {
  double min_inscribed_ratio = 0.0;  // min over cells of (centroid-ball radius)/diameter
  double min_edge_ratio = 0.0;       // min over cells of (shortest edge)/diameter
  int max_vertices = 0;
  double area_scaling_min = 0.0;     // min over cells of area/diameter^2
  double area_scaling_max = 0.0;
};

inline std::vector<Vec2> cell_coords(const PolygonCell& cell, std::span<const Vec2> vertices) {
  std::vector<Vec2> v;
  v.reserve(cell.vertex_ids.size());
  for (int id : cell.vertex_ids) {
    if (id < 0 || id >= static_cast<int>(vertices.size()))
      throw ConfigError("cell references vertex " + std::to_string(id) + " out of range");
    v.push_back(vertices[id]);
  }
  return v;
}

inline CellMetrics polygon_metrics(const PolygonCell& cell, std::span<const Vec2> vertices) {
  if (cell.vertex_ids.size() < 3) throw ConfigError("cell with fewer than 3 vertices");
  const std::vector<Vec2> v = cell_coords(cell, vertices);
  const std::size_t n = v.size();

  CellMetrics m;
  m.diameter = polygon_diameter(v);
  const double signed_area = polygon_signed_area(v);
  if (signed_area <= 1e-14 * m.diameter * m.diameter)
    throw ConfigError("degenerate or clockwise cell (area " + std::to_string(signed_area) + ")");
  if (!polygon_is_simple(v)) throw ConfigError("self-intersecting cell");
  m.area = signed_area;
  m.centroid = polygon_centroid(v);
  m.edge_lengths.resize(n);
  m.outward_normals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    const double len = e.norm();
    if (len <= 1e-14 * m.diameter) throw ConfigError("vanishing edge in cell");
    m.edge_lengths[i] = len;
    // Right-hand normal of a CCW traversal points out of the polygon.
    m.outward_normals[i] = Vec2(e.y(), -e.x()) / len;
  }
  return m;
}

// Undirected edge key for incidence counting.
namespace detail {
inline std::pair<int, int> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }
}  // namespace detail

// Structural validation: index ranges, simple CCW cells, conforming edge
// incidence (every edge in at most two cells), and a boundary list that is
// exactly the set of single-incidence edges.
inline void validate_mesh(const PolyMesh& mesh) {
  std::map<std::pair<int, int>, int> incidence;
  for (const PolygonCell& cell : mesh.cells) {
    (void)polygon_metrics(cell, mesh.vertices);  // throws on malformed cells
    const std::size_t n = cell.vertex_ids.size();
    for (std::size_t i = 0; i < n; ++i) {
      const int a = cell.vertex_ids[i];
      const int b = cell.vertex_ids[(i + 1) % n];
      int& count = incidence[detail::edge_key(a, b)];
      if (++count > 2) throw ConfigError("edge shared by more than two cells");
    }
  }
  std::map<std::pair<int, int>, int> boundary_seen;
  for (const BoundaryEdge& e : mesh.boundary) {
    if (e.a < 0 || e.b < 0 || e.a >= static_cast<int>(mesh.vertices.size()) ||
        e.b >= static_cast<int>(mesh.vertices.size()))
      throw ConfigError("boundary edge vertex out of range");
    auto it = incidence.find(detail::edge_key(e.a, e.b));
    if (it == incidence.end()) throw ConfigError("boundary edge not an edge of any cell");
    if (it->second != 1) throw ConfigError("boundary edge is interior (two incident cells)");
    if (++boundary_seen[detail::edge_key(e.a, e.b)] > 1)
      throw ConfigError("duplicate boundary edge");
  }
  for (const auto& [key, count] : incidence) {
    if (count == 1 && !boundary_seen.count(key))
      throw ConfigError("untagged boundary edge (" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ")");
  }
}

inline RegularityReport regularity_report(const PolyMesh& mesh) {
  RegularityReport r;
  r.min_inscribed_ratio = std::numeric_limits<double>::infinity();
  r.min_edge_ratio = std::numeric_limits<double>::infinity();
  r.area_scaling_min = std::numeric_limits<double>::infinity();
  r.area_scaling_max = 0.0;
  for (const PolygonCell& cell : mesh.cells) {
    const CellMetrics m = polygon_metrics(cell, mesh.vertices);
    const std::vector<Vec2> v = cell_coords(cell, mesh.vertices);
    const double rho = centered_inscribed_radius(m.centroid, v) / m.diameter;
    const double min_edge = *std::min_element(m.edge_lengths.begin(), m.edge_lengths.end());
    r.min_inscribed_ratio = std::min(r.min_inscribed_ratio, rho);
    r.min_edge_ratio = std::min(r.min_edge_ratio, min_edge / m.diameter);
    r.max_vertices = std::max(r.max_vertices, static_cast<int>(cell.vertex_ids.size()));
    const double scaling = m.area / (m.diameter * m.diameter);
    r.area_scaling_min = std::min(r.area_scaling_min, scaling);
    r.area_scaling_max = std::max(r.area_scaling_max, scaling);
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON serialization.
// Schema: { "vertices": [[x,y],...], "cells": [[i0,i1,...],...],
//           "boundary": [{"edge":[i,j], "tag":"dirichlet"|"neumann"|"free"}] }
// ---------------------------------------------------------------------------

inline nlohmann::json mesh_to_json(const PolyMesh& mesh) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const Vec2& v : mesh.vertices) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = nlohmann::json::array();
  for (const PolygonCell& c : mesh.cells) j["cells"].push_back(c.vertex_ids);
  j["boundary"] = nlohmann::json::array();
  for (const BoundaryEdge& e : mesh.boundary)
    j["boundary"].push_back({{"edge", {e.a, e.b}}, {"tag", to_string(e.tag)}});
  return j;
}

inline PolyMesh mesh_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("mesh JSON: root must be an object");
  for (const char* key : {"vertices", "cells", "boundary"})
    if (!j.contains(key)) throw ConfigError(std::string("mesh JSON: missing key \"") + key + "\"");

  PolyMesh mesh;
  for (const auto& v : j.at("vertices")) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError("mesh JSON: vertices must be [x,y] number pairs");
    mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  for (const auto& c : j.at("cells")) {
    if (!c.is_array() || c.size() < 3) throw ConfigError("mesh JSON: cell must list >= 3 vertices");
    PolygonCell cell;
    for (const auto& id : c) {
      if (!id.is_number_integer()) throw ConfigError("mesh JSON: cell indices must be integers");
      cell.vertex_ids.push_back(id.get<int>());
    }
    mesh.cells.push_back(std::move(cell));
  }
  for (const auto& b : j.at("boundary")) {
    if (!b.is_object() || !b.contains("edge") || !b.contains("tag"))
      throw ConfigError("mesh JSON: boundary entries need \"edge\" and \"tag\"");
    const auto& e = b.at("edge");
    if (!e.is_array() || e.size() != 2) throw ConfigError("mesh JSON: edge must be [i,j]");
    BoundaryEdge be;
    be.a = e[0].get<int>();
    be.b = e[1].get<int>();
    be.tag = boundary_tag_from_string(b.at("tag").get<std::string>());
    mesh.boundary.push_back(be);
  }
  validate_mesh(mesh);
  return mesh;
}

inline void mesh_io_write(const PolyMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << mesh_to_json(mesh).dump(2) << "\n";
}

inline PolyMesh mesh_io_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mesh JSON parse error: ") + e.what());
  }
  return mesh_from_json(j);
}

}  // namespace vemstab
