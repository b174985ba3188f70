#pragma once

// Global assembly of consistency + stabilization energy, residual and
// tangent; Dirichlet elimination; load-stepped Newton with a sparse direct
// factorization. Element contributions are summed in cell-index order so
// results are bit-identical across runs.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <string>
#include <vector>

#include "vemstab/element.hpp"
#include "vemstab/errors.hpp"
#include "vemstab/material.hpp"
#include "vemstab/mesh.hpp"
#include "vemstab/stab_classic.hpp"
#include "vemstab/stab_decoupled.hpp"

namespace vemstab {

struct ElementContribution {
  double energy = 0.0;
  Eigen::VectorXd residual;
  Eigen::MatrixXd tangent;
};

// Consistency part: the element energy of the projected average state.
// Its tangent annihilates the projector kernel, so all kernel stiffness
// must come from the stabilization.
inline ElementContribution element_consistency(const ElementOps& ops, const Eigen::VectorXd& u,
                                               const MaterialParams& mp) {
  ElementContribution out;
  const Mat2 f = average_deformation(ops, u);
  const double area = ops.metrics.area;
  out.energy = area * energy_density(f, mp);
  out.residual = area * (ops.grad_op.transpose() * vec2x2(first_pk(f, mp)));
  Eigen::MatrixXd k = area * (ops.grad_op.transpose() * material_tangent(f, mp) * ops.grad_op);
  out.tangent = 0.5 * (k + k.transpose());
  return out;
}

enum class StabBackend { classical, decoupled };

inline StabBackend stab_backend_from_string(const std::string& s) {
  if (s == "classical" || s == "classic") return StabBackend::classical;
  if (s == "decoupled") return StabBackend::decoupled;
  throw ConfigError("unknown stabilization backend: " + s);
}

struct StabChoice {
  StabBackend backend = StabBackend::decoupled;
  DecoupledConfig decoupled;  // used when backend == decoupled
};

// Per-cell operators and stabilization data, built once per mesh + material.
struct ElementCache {
  std::vector<ElementOps> ops;
  std::vector<ClassicParams> classic;    // classical backend
  std::vector<StabMatrices> stab;        // decoupled backend
  StabChoice choice;
};

inline ElementCache build_cache(const PolyMesh& mesh, const MaterialParams& mp,
                                const StabChoice& choice) {
  ElementCache cache;
  cache.choice = choice;
  const int n_cells = static_cast<int>(mesh.cells.size());
  cache.ops.reserve(n_cells);
  for (int c = 0; c < n_cells; ++c) {
    try {
      cache.ops.push_back(element_ops(mesh, c));
      if (choice.backend == StabBackend::classical) {
        cache.classic.push_back(classic_params(cache.ops.back(), mp));
      } else {
        cache.stab.push_back(decoupled_matrices(cache.ops.back(), mp, choice.decoupled));
      }
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (cell " + std::to_string(c) + ")", c);
    }
  }
  return cache;
}

inline double stab_energy(const ElementCache& cache, int cell, const Eigen::VectorXd& u_e) {
  if (cache.choice.backend == StabBackend::classical)
    return classic_energy(cache.ops[cell], u_e, cache.classic[cell]);
  return decoupled_energy(cache.ops[cell], u_e, cache.stab[cell]);
}

inline Eigen::VectorXd stab_residual(const ElementCache& cache, int cell,
                                     const Eigen::VectorXd& u_e) {
  if (cache.choice.backend == StabBackend::classical)
    return classic_residual(cache.ops[cell], u_e, cache.classic[cell]);
  return decoupled_residual(cache.ops[cell], u_e, cache.stab[cell]);
}

inline Eigen::MatrixXd stab_tangent(const ElementCache& cache, int cell,
                                    const Eigen::VectorXd& u_e) {
  if (cache.choice.backend == StabBackend::classical)
    return classic_tangent(cache.ops[cell], u_e, cache.classic[cell]);
  return decoupled_tangent(cache.ops[cell], u_e, cache.stab[cell]);
}

inline Eigen::VectorXd gather_cell_dofs(const PolyMesh& mesh, int cell,
                                        const Eigen::VectorXd& global) {
  const auto& ids = mesh.cells[cell].vertex_ids;
  Eigen::VectorXd u(2 * ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) u.segment<2>(2 * k) = global.segment<2>(2 * ids[k]);
  return u;
}

// Constant Neumann traction on tagged edges (midpoint rule: each endpoint of
// an edge of length L receives L/2 of the traction), plus a constant body
// force distributed by the vertex-averaging zero-order projection (|E|/N per
// vertex of each cell).
inline Eigen::VectorXd external_load(const PolyMesh& mesh, const Vec2& neumann_traction,
                                     const Vec2& body_force = Vec2::Zero()) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.vertices.size());
  for (const BoundaryEdge& be : mesh.boundary) {
    if (be.tag != BoundaryTag::neumann) continue;
    const double len = (mesh.vertices[be.b] - mesh.vertices[be.a]).norm();
    f.segment<2>(2 * be.a) += 0.5 * len * neumann_traction;
    f.segment<2>(2 * be.b) += 0.5 * len * neumann_traction;
  }
  if (!body_force.isZero()) {
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      const auto& ids = mesh.cells[c].vertex_ids;
      const double w =
          polygon_metrics(mesh.cells[c], mesh.vertices).area / static_cast<double>(ids.size());
      for (int v : ids) f.segment<2>(2 * v) += w * body_force;
    }
  }
  return f;
}

struct GlobalSystem {
  Eigen::VectorXd residual;              // internal - load_factor * external
  Eigen::SparseMatrix<double> tangent;   // symmetric
  double energy = 0.0;                   // total discrete energy at this state
};

inline GlobalSystem assemble(const PolyMesh& mesh, const ElementCache& cache,
                             const Eigen::VectorXd& dofs, const MaterialParams& mp,
                             const Eigen::VectorXd& load, double load_factor) {
  const int n_dof = static_cast<int>(2 * mesh.vertices.size());
  GlobalSystem sys;
  sys.residual = -load_factor * load;
  sys.energy = -load_factor * load.dot(dofs);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& ids = mesh.cells[c].vertex_ids;
    const Eigen::VectorXd u_e = gather_cell_dofs(mesh, static_cast<int>(c), dofs);
    try {
      const ElementContribution cons = element_consistency(cache.ops[c], u_e, mp);
      const Eigen::VectorXd r_e = cons.residual + stab_residual(cache, static_cast<int>(c), u_e);
      const Eigen::MatrixXd k_e = cons.tangent + stab_tangent(cache, static_cast<int>(c), u_e);
      sys.energy += cons.energy + stab_energy(cache, static_cast<int>(c), u_e);
      for (std::size_t a = 0; a < ids.size(); ++a)
        for (int d = 0; d < 2; ++d)
          sys.residual(2 * ids[a] + d) += r_e(2 * a + d);
      for (std::size_t a = 0; a < ids.size(); ++a)
        for (int da = 0; da < 2; ++da)
          for (std::size_t b = 0; b < ids.size(); ++b)
            for (int db = 0; db < 2; ++db)
              trips.emplace_back(2 * ids[a] + da, 2 * ids[b] + db, k_e(2 * a + da, 2 * b + db));
    } catch (const NumericalError& e) {
      if (e.cell_id >= 0) throw;
      throw NumericalError(std::string(e.what()) + " (cell " + std::to_string(c) + ")",
                           static_cast<int>(c));
    }
  }
  sys.tangent.resize(n_dof, n_dof);
  sys.tangent.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

struct BoundaryConditions {
  // Prescribed displacement on vertices of dirichlet-tagged edges, evaluated
  // at the reference position and scaled by the load factor.
  std::function<Vec2(const Vec2&)> dirichlet = [](const Vec2&) { return Vec2::Zero(); };
  Vec2 neumann_traction = Vec2::Zero();
  Vec2 body_force = Vec2::Zero();
};

inline std::vector<int> dirichlet_vertices(const PolyMesh& mesh) {
  std::vector<char> mark(mesh.vertices.size(), 0);
  for (const BoundaryEdge& be : mesh.boundary)
    if (be.tag == BoundaryTag::dirichlet) mark[be.a] = mark[be.b] = 1;
  std::vector<int> out;
  for (std::size_t v = 0; v < mark.size(); ++v)
    if (mark[v]) out.push_back(static_cast<int>(v));
  return out;
}

struct NewtonConfig {
  int n_load_steps = 10;
  int max_iters = 50;
  double tol_residual = 1e-8;
  double tol_increment = 1e-10;
  int tracked_vertex = -1;  // optional vertex whose displacement is recorded

  void validate() const {
    if (n_load_steps < 1 || max_iters < 1 || !(tol_residual > 0.0) || !(tol_increment > 0.0))
      throw ConfigError("newton configuration values must be positive");
  }
};

struct StepTrace {
  int step = 0;
  double load_factor = 0.0;
  int iterations = 0;
  std::vector<double> residual_norms;   // free-dof residual at each evaluation
  std::vector<double> increment_norms;  // one per linear solve
  Vec2 tracked_displacement = Vec2::Zero();
  bool converged = false;
};

struct SolveResult {
  Eigen::VectorXd dofs;
  std::vector<StepTrace> steps;
};

// Solves the load-stepped problem. If `partial` is non-null it always holds
// the steps completed so far (plus the failing step) and the latest dofs,
// even when the solve throws NonConvergence.
inline SolveResult newton_solve(const PolyMesh& mesh, const BoundaryConditions& bc,
                                const MaterialParams& mp, const StabChoice& stab,
                                const NewtonConfig& cfg, SolveResult* partial = nullptr) {
  cfg.validate();
  const ElementCache cache = build_cache(mesh, mp, stab);
  const Eigen::VectorXd load = external_load(mesh, bc.neumann_traction, bc.body_force);
  const int n_dof = static_cast<int>(2 * mesh.vertices.size());

  const std::vector<int> fixed_vertices = dirichlet_vertices(mesh);
  if (fixed_vertices.empty()) throw ConfigError("no dirichlet-tagged boundary in mesh");
  std::vector<char> fixed_dof(n_dof, 0);
  for (int v : fixed_vertices) fixed_dof[2 * v] = fixed_dof[2 * v + 1] = 1;
  std::vector<int> free_index(n_dof, -1);
  int n_free = 0;
  for (int d = 0; d < n_dof; ++d)
    if (!fixed_dof[d]) free_index[d] = n_free++;

  SolveResult result;
  result.dofs = Eigen::VectorXd::Zero(n_dof);

  for (int step = 1; step <= cfg.n_load_steps; ++step) {
    const double gamma = static_cast<double>(step) / cfg.n_load_steps;
    for (int v : fixed_vertices)
      result.dofs.segment<2>(2 * v) = gamma * bc.dirichlet(mesh.vertices[v]);

    StepTrace trace;
    trace.step = step;
    trace.load_factor = gamma;

    try {
      for (int iter = 0;; ++iter) {
        const GlobalSystem sys = assemble(mesh, cache, result.dofs, mp, load, gamma);
        Eigen::VectorXd r_free(n_free);
        for (int d = 0; d < n_dof; ++d)
          if (free_index[d] >= 0) r_free(free_index[d]) = sys.residual(d);
        const double r_norm = r_free.norm();
        trace.residual_norms.push_back(r_norm);
        if (r_norm < cfg.tol_residual) {
          trace.converged = true;
          break;
        }
        if (iter >= cfg.max_iters)
          throw NonConvergence("newton did not converge at load step " + std::to_string(step) +
                               ": residual " + std::to_string(r_norm) + " after " +
                               std::to_string(iter) + " iterations");

        // Reduced tangent on free dofs.
        std::vector<Eigen::Triplet<double>> trips;
        for (int col = 0; col < sys.tangent.outerSize(); ++col)
          for (Eigen::SparseMatrix<double>::InnerIterator it(sys.tangent, col); it; ++it)
            if (free_index[it.row()] >= 0 && free_index[it.col()] >= 0)
              trips.emplace_back(free_index[it.row()], free_index[it.col()], it.value());
        Eigen::SparseMatrix<double> k_free(n_free, n_free);
        k_free.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(k_free);
        if (lu.info() != Eigen::Success)
          throw NumericalError("tangent factorization failed at load step " +
                               std::to_string(step));
        const Eigen::VectorXd du = lu.solve(-r_free);
        if (lu.info() != Eigen::Success)
          throw NumericalError("tangent solve failed at load step " + std::to_string(step));

        for (int d = 0; d < n_dof; ++d)
          if (free_index[d] >= 0) result.dofs(d) += du(free_index[d]);
        trace.increment_norms.push_back(du.norm());
        trace.iterations = iter + 1;
        if (du.norm() < cfg.tol_increment) {
          trace.converged = true;
          break;
        }
      }
    } catch (...) {
      if (partial != nullptr) {
        if (cfg.tracked_vertex >= 0)
          trace.tracked_displacement = result.dofs.segment<2>(2 * cfg.tracked_vertex);
        partial->steps = result.steps;
        partial->steps.push_back(trace);
        partial->dofs = result.dofs;
      }
      throw;
    }

    if (cfg.tracked_vertex >= 0)
      trace.tracked_displacement = result.dofs.segment<2>(2 * cfg.tracked_vertex);
    result.steps.push_back(std::move(trace));
  }
  return result;
}

// Total discrete energy at a fixed state (for finite-difference oracles).
inline double total_energy(const PolyMesh& mesh, const ElementCache& cache,
                           const Eigen::VectorXd& dofs, const MaterialParams& mp,
                           const Eigen::VectorXd& load, double load_factor) {
  return assemble(mesh, cache, dofs, mp, load, load_factor).energy;
}

// Sum of element stabilization energies at a fixed state.
inline double total_stab_energy(const PolyMesh& mesh, const ElementCache& cache,
                                const Eigen::VectorXd& dofs) {
  double acc = 0.0;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    acc += stab_energy(cache, static_cast<int>(c),
                       gather_cell_dofs(mesh, static_cast<int>(c), dofs));
  return acc;
}

}  // namespace vemstab
