// Command-line front end: mesh generation, the Cook's-membrane benchmark,
// single-element spectral diagnostics, and mesh regularity checks.
//
// Commands:
//   vemstab mesh gen        --family F --h H [--seed S] --out mesh.json
//   vemstab cook run        --family F --h H --stab S [--nu ...] --out trace.csv
//   vemstab diag kernel-mode [--seed S] [--young E] --out sweep.csv
//   vemstab diag spectrum   [--nu ...] --out spectrum.csv
//   vemstab check regularity --family F --h H [--seed S] [--out report.json]
//
// All outputs are deterministic for a fixed configuration: repeated runs
// produce byte-identical files. Exit codes: 0 success, 2 configuration
// error, 3 non-convergence, 4 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vemstab/assembly.hpp"
#include "vemstab/diagnostics.hpp"
#include "vemstab/errors.hpp"
#include "vemstab/material.hpp"
#include "vemstab/mesh.hpp"
#include "vemstab/meshgen.hpp"

namespace {

using nlohmann::json;
using namespace vemstab;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || (item.key() == k);
    if (!ok) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
  }
}

// Settings shared by the commands; a JSON config file provides defaults and
// individual flags override it.
struct Settings {
  double young = 200.0;
  bool young_set = false;
  double mu = 0.0;
  bool mu_set = false;
  double poisson = 0.3;

  std::string stab = "decoupled";
  double beta = 1.0;
  double g_max = 4.0;
  std::string kappa_policy = "auto";  // auto | zero | bulk | <number>

  std::string family = "quad";
  double h = 0.25;
  std::uint64_t seed = 1;

  int steps = 10;
  int max_iters = 50;
  double tol_residual = 1e-8;
  double tol_increment = 1e-10;

  double q0 = 4.0;
  std::string out;
};

void load_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  reject_unknown_keys(j, {"material", "stabilization", "mesh", "newton", "output"}, "config");
  if (j.contains("material")) {
    const json& m = j["material"];
    reject_unknown_keys(m, {"young", "mu", "poisson"}, "material");
    if (m.contains("young")) {
      s.young = m["young"].get<double>();
      s.young_set = true;
    }
    if (m.contains("mu")) {
      s.mu = m["mu"].get<double>();
      s.mu_set = true;
    }
    if (m.contains("poisson")) s.poisson = m["poisson"].get<double>();
  }
  if (j.contains("stabilization")) {
    const json& m = j["stabilization"];
    reject_unknown_keys(m, {"mode", "beta", "g_max", "kappa_policy"}, "stabilization");
    if (m.contains("mode")) s.stab = m["mode"].get<std::string>();
    if (m.contains("beta")) s.beta = m["beta"].get<double>();
    if (m.contains("g_max")) s.g_max = m["g_max"].get<double>();
    if (m.contains("kappa_policy")) {
      if (m["kappa_policy"].is_number())
        s.kappa_policy = fmt(m["kappa_policy"].get<double>());
      else
        s.kappa_policy = m["kappa_policy"].get<std::string>();
    }
  }
  if (j.contains("mesh")) {
    const json& m = j["mesh"];
    reject_unknown_keys(m, {"family", "h", "seed"}, "mesh");
    if (m.contains("family")) s.family = m["family"].get<std::string>();
    if (m.contains("h")) s.h = m["h"].get<double>();
    if (m.contains("seed")) s.seed = m["seed"].get<std::uint64_t>();
  }
  if (j.contains("newton")) {
    const json& m = j["newton"];
    reject_unknown_keys(m, {"steps", "max_iters", "tol_residual", "tol_increment"}, "newton");
    if (m.contains("steps")) s.steps = m["steps"].get<int>();
    if (m.contains("max_iters")) s.max_iters = m["max_iters"].get<int>();
    if (m.contains("tol_residual")) s.tol_residual = m["tol_residual"].get<double>();
    if (m.contains("tol_increment")) s.tol_increment = m["tol_increment"].get<double>();
  }
  if (j.contains("output")) s.out = j["output"].get<std::string>();
}

MaterialParams material_from(const Settings& s) {
  if (s.mu_set) return params_from_mu_poisson(s.mu, s.poisson);
  return lame_from(s.young, s.poisson);
}

DecoupledConfig decoupled_from(const Settings& s, const MaterialParams& mp) {
  DecoupledConfig cfg = default_decoupled_config(mp);
  cfg.beta = s.beta;
  cfg.g_max = s.g_max;
  if (s.kappa_policy == "auto") {
    // keep the material-based default
  } else if (s.kappa_policy == "zero") {
    cfg.kappa_mode = DecoupledConfig::Kappa::zero;
  } else if (s.kappa_policy == "bulk") {
    cfg.kappa_mode = DecoupledConfig::Kappa::constant_value;
    cfg.kappa_value = bulk_modulus(mp);
  } else {
    try {
      cfg.kappa_mode = DecoupledConfig::Kappa::constant_value;
      cfg.kappa_value = std::stod(s.kappa_policy);
    } catch (const std::exception&) {
      throw ConfigError("invalid kappa_policy: " + s.kappa_policy);
    }
  }
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}

int run_mesh_gen(const Settings& s) {
  if (s.out.empty()) throw ConfigError("mesh gen requires --out");
  const PolyMesh mesh = gen_cook(cook_family_from_string(s.family), s.h, s.seed);
  mesh_io_write(mesh, s.out);
  const RegularityReport rep = regularity_report(mesh);
  json out = {{"family", s.family},
              {"h", s.h},
              {"seed", s.seed},
              {"n_vertices", mesh.vertices.size()},
              {"n_cells", mesh.cells.size()},
              {"min_inscribed_ratio", rep.min_inscribed_ratio},
              {"min_edge_ratio", rep.min_edge_ratio},
              {"max_vertices", rep.max_vertices},
              {"area_scaling_min", rep.area_scaling_min},
              {"area_scaling_max", rep.area_scaling_max}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_check_regularity(const Settings& s) {
  const PolyMesh mesh = gen_cook(cook_family_from_string(s.family), s.h, s.seed);
  const RegularityReport rep = regularity_report(mesh);
  json out = {{"family", s.family},
              {"h", s.h},
              {"seed", s.seed},
              {"n_cells", mesh.cells.size()},
              {"min_inscribed_ratio", rep.min_inscribed_ratio},
              {"min_edge_ratio", rep.min_edge_ratio},
              {"max_vertices", rep.max_vertices},
              {"area_scaling_min", rep.area_scaling_min},
              {"area_scaling_max", rep.area_scaling_max}};
  if (!s.out.empty()) {
    auto f = open_out(s.out);
    f << out.dump(2) << "\n";
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int find_tip_vertex(const PolyMesh& mesh) {
  const Vec2 target(48.0, 60.0);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const double d = (mesh.vertices[v] - target).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(v);
    }
  }
  return best;
}

void write_cook_trace(std::ostream& out, const Settings& s, const MaterialParams& mp,
                      const SolveResult& res) {
  out << "# cook run family=" << s.family << " h=" << fmt(s.h) << " stab=" << s.stab
      << " nu=" << fmt(mp.poisson) << " mu=" << fmt(mp.mu) << " q0=" << fmt(s.q0)
      << " steps=" << s.steps << " seed=" << s.seed << " beta=" << fmt(s.beta)
      << " g_max=" << fmt(s.g_max) << " kappa_policy=" << s.kappa_policy << "\n";
  out << "step,load_factor,iters,residual_norms,tip_uy\n";
  for (const StepTrace& st : res.steps) {
    out << st.step << "," << fmt(st.load_factor) << "," << st.iterations << ",";
    for (std::size_t i = 0; i < st.residual_norms.size(); ++i)
      out << (i ? ";" : "") << fmt(st.residual_norms[i]);
    out << "," << fmt(st.tracked_displacement.y()) << "\n";
  }
}

int run_cook(const Settings& s0) {
  Settings s = s0;
  if (!s.mu_set && !s.young_set) {
    s.mu = 40.0;
    s.mu_set = true;
    s.poisson = s0.poisson == 0.3 ? 0.499 : s0.poisson;  // benchmark default
  }
  if (s.out.empty()) throw ConfigError("cook run requires --out");
  const MaterialParams mp = material_from(s);
  const PolyMesh mesh = gen_cook(cook_family_from_string(s.family), s.h, s.seed);

  StabChoice choice;
  choice.backend = stab_backend_from_string(s.stab);
  choice.decoupled = decoupled_from(s, mp);

  BoundaryConditions bc;
  bc.neumann_traction = Vec2(0.0, s.q0);

  NewtonConfig ncfg;
  ncfg.n_load_steps = s.steps;
  ncfg.max_iters = s.max_iters;
  ncfg.tol_residual = s.tol_residual;
  ncfg.tol_increment = s.tol_increment;
  ncfg.tracked_vertex = find_tip_vertex(mesh);

  SolveResult partial;
  bool converged = true;
  std::string failure;
  try {
    partial = newton_solve(mesh, bc, mp, choice, ncfg, &partial);
  } catch (const NonConvergence& e) {
    converged = false;
    failure = e.what();
  }

  auto file = open_out(s.out);
  write_cook_trace(file, s, mp, partial);

  const double tip =
      partial.steps.empty() ? 0.0 : partial.steps.back().tracked_displacement.y();
  std::cout << "# summary\n";
  std::cout << "family,h,stab,nu,tip_uy,converged\n";
  std::cout << s.family << "," << fmt(s.h) << "," << s.stab << "," << fmt(mp.poisson) << ","
            << fmt(tip) << "," << (converged ? 1 : 0) << "\n";
  if (!converged) {
    std::cerr << "non-convergence: " << failure << "\n";
    return 3;
  }
  return 0;
}

int run_kernel_mode(const Settings& s, double amplitude, double iso_threshold) {
  if (s.out.empty()) throw ConfigError("diag kernel-mode requires --out");
  const ElementOps ops = element_ops(unit_square_cell());
  DecoupledConfig base;
  base.beta = s.beta;
  base.g_max = s.g_max;
  const std::vector<MaterialParams> mats =
      sweep_materials(s.young, standard_poisson_sweep());
  const KernelModeDiag diag =
      isochoric_kernel_mode(ops, s.seed, mats, base, iso_threshold, amplitude);

  auto out = open_out(s.out);
  out << "# diag kernel-mode cell=unit_square young=" << fmt(s.young) << " seed=" << s.seed
      << " seed_used=" << diag.seed_used << " amplitude=" << fmt(diag.amplitude)
      << " iso_threshold=" << fmt(iso_threshold)
      << " max_volume_deviation=" << fmt(diag.max_volume_deviation)
      << " projector_residual=" << fmt(diag.projector_residual_ratio) << " beta=" << fmt(s.beta)
      << " g_max=" << fmt(s.g_max) << "\n";
  out << "nu,E_raw_classic,E_raw_dec,E_over_mu_classic,E_over_mu_dec,E_over_muhat_classic\n";
  for (const KernelModeSweepRow& row : diag.sweep) {
    out << fmt(row.poisson) << "," << fmt(row.classic_raw) << "," << fmt(row.dec_raw) << ","
        << fmt(row.classic_over_mu) << "," << fmt(row.dec_over_mu) << ","
        << fmt(row.classic_over_mu_eff) << "\n";
  }
  return 0;
}

int run_spectrum(const Settings& s) {
  if (s.out.empty()) throw ConfigError("diag spectrum requires --out");
  auto out = open_out(s.out);
  out << "# diag spectrum young=" << fmt(s.young) << " nu=" << fmt(s.poisson)
      << " beta=" << fmt(s.beta) << " g_max=" << fmt(s.g_max) << " stab=" << s.stab << "\n";
  out << "sweep,label,param,zero_count,kernel_dim,eig_min,eig_max,ratio,eig_min_over_mu,"
         "eig_max_over_mu,eigs\n";

  const StabBackend backend = stab_backend_from_string(s.stab);
  const MaterialParams mp = lame_from(s.young, s.poisson);

  auto emit = [&](const std::string& sweep, const std::string& label, double param,
                  const ElementOps& ops, const MaterialParams& m, const DecoupledConfig& cfg) {
    const Eigen::MatrixXd mat = stabilization_matrix(ops, m, backend, cfg);
    const SpectralReport rep = kernel_spectrum(ops, mat);
    const double lo = rep.kernel_eigenvalues.minCoeff();
    const double hi = rep.kernel_eigenvalues.maxCoeff();
    out << sweep << "," << label << "," << fmt(param) << "," << rep.zero_count << ","
        << rep.kernel_eigenvalues.size() << "," << fmt(lo) << "," << fmt(hi) << ","
        << fmt(hi / lo) << "," << fmt(lo / m.mu) << "," << fmt(hi / m.mu) << ",";
    for (int i = 0; i < rep.kernel_eigenvalues.size(); ++i)
      out << (i ? ";" : "") << fmt(rep.kernel_eigenvalues(i));
    out << "\n";
  };

  // Shape sweep: unit square plus rectangles of growing aspect.
  {
    DecoupledConfig cfg = decoupled_from(s, mp);
    emit("shape", "square", 1.0, element_ops(unit_square_cell()), mp, cfg);
    for (double r : {1.5, 2.0, 3.0}) {
      std::ostringstream label;
      label << "rect_" << r;
      emit("shape", label.str(), r, element_ops(rectangle_cell(r, 1.0)), mp, cfg);
    }
  }

  // Bulk-weight sweep on the regular hexagon.
  for (double kappa : {0.0, 1.0, 10.0, 100.0}) {
    DecoupledConfig cfg = decoupled_from(s, mp);
    cfg.kappa_mode = kappa == 0.0 ? DecoupledConfig::Kappa::zero
                                  : DecoupledConfig::Kappa::constant_value;
    cfg.kappa_value = kappa;
    std::ostringstream label;
    label << "hex_kappa_" << kappa;
    emit("kappa", label.str(), kappa, element_ops(regular_polygon_cell(6)), mp, cfg);
  }

  // Poisson sweep on the unit square at fixed Young modulus.
  for (double nu : standard_poisson_sweep()) {
    const MaterialParams m = lame_from(s.young, nu);
    DecoupledConfig cfg = decoupled_from(s, m);
    std::ostringstream label;
    label << "square_nu_" << nu;
    emit("nu", label.str(), nu, element_ops(unit_square_cell()), m, cfg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("VEMSTAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) Eigen::setNbThreads(n);
  }

  CLI::App app{"polygonal-mesh hyperelasticity solver with decoupled stabilization"};
  app.require_subcommand(1);

  Settings s;
  std::string config_path;
  double amplitude = 1e-2;
  double iso_threshold = 2e-2;

  auto add_common = [&](CLI::App* cmd) {
    // Long-only help so the short name stays free for the --h mesh-size option.
    cmd->set_help_flag("--help", "print this help message and exit");
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--family", s.family, "mesh family: quad|dist1|dist2|voronoi");
    cmd->add_option("--h", s.h, "mesh size parameter");
    cmd->add_option("--stab", s.stab, "stabilization: classical|decoupled");
    cmd->add_option("--nu", s.poisson, "Poisson ratio");
    cmd->add_option("--young", s.young, "Young modulus")->each([&](const std::string&) {
      s.young_set = true;
    });
    cmd->add_option("--mu", s.mu, "shear modulus (overrides --young)")
        ->each([&](const std::string&) { s.mu_set = true; });
    cmd->add_option("--seed", s.seed, "random seed");
    cmd->add_option("--out", s.out, "output path");
    cmd->add_option("--beta", s.beta, "anisotropy exponent");
    cmd->add_option("--g-max", s.g_max, "anisotropy cap");
    cmd->add_option("--kappa-policy", s.kappa_policy, "auto|zero|bulk|<number>");
  };

  CLI::App* mesh = app.add_subcommand("mesh", "mesh utilities");
  CLI::App* mesh_gen = mesh->add_subcommand("gen", "generate a Cook-domain mesh");
  add_common(mesh_gen);

  CLI::App* cook = app.add_subcommand("cook", "Cook's membrane benchmark");
  CLI::App* cook_run = cook->add_subcommand("run", "run the benchmark");
  add_common(cook_run);
  cook_run->add_option("--q0", s.q0, "edge traction magnitude");
  cook_run->add_option("--steps", s.steps, "number of load steps");
  cook_run->add_option("--max-iters", s.max_iters, "newton iteration cap");
  cook_run->add_option("--tol-residual", s.tol_residual, "newton residual tolerance");
  cook_run->add_option("--tol-increment", s.tol_increment, "newton increment tolerance");

  CLI::App* diag = app.add_subcommand("diag", "single-element diagnostics");
  CLI::App* diag_kernel = diag->add_subcommand("kernel-mode", "kernel-mode energy sweep");
  add_common(diag_kernel);
  diag_kernel->add_option("--amplitude", amplitude, "probe amplitude");
  diag_kernel->add_option("--iso-threshold", iso_threshold, "volume-deviation acceptance");
  CLI::App* diag_spectrum = diag->add_subcommand("spectrum", "stabilization spectra");
  add_common(diag_spectrum);

  CLI::App* check = app.add_subcommand("check", "validation utilities");
  CLI::App* check_reg = check->add_subcommand("regularity", "mesh regularity report");
  add_common(check_reg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    // Merge order: config file first, then any flag whose parsed value
    // differs from the built-in default (--young/--mu are tracked explicitly
    // so they override even when set to the default value).
    if (!config_path.empty()) {
      Settings file_settings;
      load_config(config_path, file_settings);
      // Apply config for everything the command line left at its default.
      Settings flags = s;
      s = file_settings;
      auto keep = [](auto& dst, const auto& flag_value, const auto& default_value) {
        if (!(flag_value == default_value)) dst = flag_value;
      };
      const Settings d;
      keep(s.family, flags.family, d.family);
      keep(s.h, flags.h, d.h);
      keep(s.stab, flags.stab, d.stab);
      keep(s.poisson, flags.poisson, d.poisson);
      keep(s.seed, flags.seed, d.seed);
      keep(s.out, flags.out, d.out);
      keep(s.beta, flags.beta, d.beta);
      keep(s.g_max, flags.g_max, d.g_max);
      keep(s.kappa_policy, flags.kappa_policy, d.kappa_policy);
      keep(s.q0, flags.q0, d.q0);
      keep(s.steps, flags.steps, d.steps);
      keep(s.max_iters, flags.max_iters, d.max_iters);
      keep(s.tol_residual, flags.tol_residual, d.tol_residual);
      keep(s.tol_increment, flags.tol_increment, d.tol_increment);
      if (flags.young_set) {
        s.young = flags.young;
        s.young_set = true;
      }
      if (flags.mu_set) {
        s.mu = flags.mu;
        s.mu_set = true;
      }
    }

    if (mesh_gen->parsed()) return run_mesh_gen(s);
    if (cook_run->parsed()) return run_cook(s);
    if (diag_kernel->parsed()) return run_kernel_mode(s, amplitude, iso_threshold);
    if (diag_spectrum->parsed()) return run_spectrum(s);
    if (check_reg->parsed()) return run_check_regularity(s);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
