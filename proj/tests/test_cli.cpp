#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vemstab/mesh.hpp"

namespace vemstab {
namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(VEMSTAB_CLI_PATH) + " " + args + " 2>/dev/null";
  CmdResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return res;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) res.out.append(buf, n);
  const int status = pclose(pipe);
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  return res;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vemstab_cli_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

TEST(Cli, HelpExitsZero) {
  const CmdResult res = run_cli("--help");
  EXPECT_EQ(res.exit_code, 0);
  EXPECT_NE(res.out.find("cook"), std::string::npos);
  EXPECT_NE(res.out.find("diag"), std::string::npos);
}

TEST(Cli, UnknownFlagFailsWithTwo) {
  EXPECT_EQ(run_cli("mesh gen --nonsense 1").exit_code, 2);
}

TEST(Cli, MissingOutputPathFailsWithTwo) {
  EXPECT_EQ(run_cli("diag spectrum").exit_code, 2);
}

TEST(Cli, UnknownFamilyFailsWithTwo) {
  EXPECT_EQ(run_cli("mesh gen --family wedge --out " + tmp_path("bad.json")).exit_code, 2);
}

TEST(Cli, MeshGenWritesAValidMeshFile) {
  const std::string path = tmp_path("quad.json");
  const CmdResult res = run_cli("mesh gen --family quad --h 0.25 --out " + path);
  ASSERT_EQ(res.exit_code, 0);
  EXPECT_NE(res.out.find("n_cells"), std::string::npos);

  const PolyMesh mesh = mesh_io_read(path);
  EXPECT_EQ(mesh.cells.size(), 16u);
  double area = 0.0;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    area += polygon_metrics(mesh.cells[c], mesh.vertices).area;
  EXPECT_NEAR(area, 1440.0, 1e-9);
}

TEST(Cli, MeshGenIsByteDeterministic) {
  const std::string a = tmp_path("voro_a.json");
  const std::string b = tmp_path("voro_b.json");
  ASSERT_EQ(run_cli("mesh gen --family voronoi --h 0.25 --seed 3 --out " + a).exit_code, 0);
  ASSERT_EQ(run_cli("mesh gen --family voronoi --h 0.25 --seed 3 --out " + b).exit_code, 0);
  const std::string ca = slurp(a), cb = slurp(b);
  ASSERT_FALSE(ca.empty());
  EXPECT_EQ(ca, cb);
}

TEST(Cli, CookRunWritesTraceAndSummary) {
  const std::string path = tmp_path("cook_trace.csv");
  const CmdResult res = run_cli("cook run --family quad --h 0.5 --steps 2 --out " + path);
  ASSERT_EQ(res.exit_code, 0);

  // Summary goes to stdout as a one-row CSV.
  const std::vector<std::string> out_lines = split_lines(res.out);
  auto it = std::find(out_lines.begin(), out_lines.end(),
                      "family,h,stab,nu,tip_uy,converged");
  ASSERT_NE(it, out_lines.end());
  ASSERT_NE(std::next(it), out_lines.end());
  const std::vector<std::string> f = split_fields(*std::next(it));
  ASSERT_EQ(f.size(), 6u);
  EXPECT_EQ(f[0], "quad");
  EXPECT_EQ(f[2], "decoupled");
  EXPECT_EQ(f[5], "1");
  const double tip = std::stod(f[4]);
  EXPECT_GT(tip, 0.0);
  EXPECT_LT(tip, 60.0);

  // Trace file: comment header, column header, one row per load step.
  const std::vector<std::string> file_lines = split_lines(slurp(path));
  ASSERT_GE(file_lines.size(), 4u);
  EXPECT_EQ(file_lines[0].rfind("# cook run", 0), 0u);
  EXPECT_EQ(file_lines[1], "step,load_factor,iters,residual_norms,tip_uy");
  EXPECT_EQ(file_lines.size(), 4u);
  EXPECT_EQ(split_fields(file_lines[2])[0], "1");
  EXPECT_EQ(split_fields(file_lines[3])[0], "2");
}

TEST(Cli, CookRunNonConvergenceExitsThreeWithPartialTrace) {
  const std::string path = tmp_path("cook_fail.csv");
  const CmdResult res =
      run_cli("cook run --family quad --h 0.5 --steps 1 --max-iters 1 --out " + path);
  EXPECT_EQ(res.exit_code, 3);
  const std::vector<std::string> out_lines = split_lines(res.out);
  auto it = std::find(out_lines.begin(), out_lines.end(),
                      "family,h,stab,nu,tip_uy,converged");
  ASSERT_NE(it, out_lines.end());
  EXPECT_EQ(split_fields(*std::next(it))[5], "0");
  // The failing step still lands in the trace file.
  const std::vector<std::string> file_lines = split_lines(slurp(path));
  ASSERT_GE(file_lines.size(), 3u);
  EXPECT_EQ(file_lines[1], "step,load_factor,iters,residual_norms,tip_uy");
}

TEST(Cli, KernelModeCsvHasTheDocumentedColumns) {
  const std::string path = tmp_path("kernel_mode.csv");
  ASSERT_EQ(run_cli("diag kernel-mode --out " + path).exit_code, 0);
  const std::vector<std::string> lines = split_lines(slurp(path));
  ASSERT_EQ(lines.size(), 8u);  // comment + header + six sweep rows
  EXPECT_EQ(lines[0].rfind("# diag kernel-mode", 0), 0u);
  EXPECT_EQ(lines[1],
            "nu,E_raw_classic,E_raw_dec,E_over_mu_classic,E_over_mu_dec,"
            "E_over_muhat_classic");
  const std::vector<double> sweep = {0.3, 0.4, 0.45, 0.49, 0.499, 0.4999};
  for (int i = 0; i < 6; ++i) {
    const std::vector<std::string> f = split_fields(lines[2 + i]);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_NEAR(std::stod(f[0]), sweep[i], 1e-12);
    // On the unit square the decoupled normalized energy is exactly 1/4.
    EXPECT_NEAR(std::stod(f[4]), 0.25, 1e-9);
    EXPECT_GT(std::stod(f[1]), 0.0);
  }
}

TEST(Cli, SpectrumCsvCoversShapeKappaAndPoissonSweeps) {
  const std::string path = tmp_path("spectrum.csv");
  ASSERT_EQ(run_cli("diag spectrum --out " + path).exit_code, 0);
  const std::vector<std::string> lines = split_lines(slurp(path));
  ASSERT_EQ(lines.size(), 16u);  // comment + header + 4 shape + 4 kappa + 6 nu
  EXPECT_EQ(lines[1],
            "sweep,label,param,zero_count,kernel_dim,eig_min,eig_max,ratio,"
            "eig_min_over_mu,eig_max_over_mu,eigs");
  int shape = 0, kappa = 0, nu = 0;
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::vector<std::string> f = split_fields(lines[i]);
    ASSERT_EQ(f.size(), 11u) << lines[i];
    if (f[0] == "shape") ++shape;
    if (f[0] == "kappa") ++kappa;
    if (f[0] == "nu") ++nu;
    EXPECT_EQ(f[3], "6");  // always six zero modes
    EXPECT_GT(std::stod(f[5]), 0.0);
  }
  EXPECT_EQ(shape, 4);
  EXPECT_EQ(kappa, 4);
  EXPECT_EQ(nu, 6);

  // The unit square row is isotropic: ratio 1.
  const std::vector<std::string> square = split_fields(lines[2]);
  EXPECT_EQ(square[1], "square");
  EXPECT_NEAR(std::stod(square[7]), 1.0, 1e-9);
}

TEST(Cli, ConfigFileProvidesDefaultsAndFlagsOverride) {
  const std::string trace = tmp_path("cfg_trace.csv");
  const std::string cfg = tmp_path("cfg.json");
  {
    nlohmann::json j;
    j["material"] = {{"young", 100.0}, {"poisson", 0.45}};
    j["mesh"] = {{"family", "quad"}, {"h", 0.5}};
    j["newton"] = {{"steps", 3}};
    j["output"] = trace;
    std::ofstream f(cfg);
    f << j.dump(2);
  }
  const CmdResult res = run_cli("cook run --config " + cfg + " --h 0.125");
  ASSERT_EQ(res.exit_code, 0);
  const std::vector<std::string> lines = split_lines(slurp(trace));
  ASSERT_GE(lines.size(), 5u);
  // Flag --h beats the config value; the rest comes from the file.
  EXPECT_NE(lines[0].find(" h=0.125 "), std::string::npos);
  EXPECT_NE(lines[0].find("family=quad"), std::string::npos);
  EXPECT_NE(lines[0].find("nu=0.45"), std::string::npos);
  EXPECT_NE(lines[0].find("steps=3"), std::string::npos);
  EXPECT_EQ(lines.size(), 5u);  // comment + header + three load steps
}

TEST(Cli, ConfigRejectsUnknownKeys) {
  const std::string cfg = tmp_path("bad_cfg.json");
  {
    std::ofstream f(cfg);
    f << "{\"materials\": {\"young\": 100}}";
  }
  EXPECT_EQ(run_cli("cook run --config " + cfg + " --out " + tmp_path("never.csv")).exit_code,
            2);
}

TEST(Cli, CheckRegularityReportsJson) {
  const CmdResult res = run_cli("check regularity --family quad --h 0.25");
  ASSERT_EQ(res.exit_code, 0);
  const nlohmann::json j = nlohmann::json::parse(res.out);
  EXPECT_EQ(j["n_cells"].get<int>(), 16);
  EXPECT_GT(j["min_inscribed_ratio"].get<double>(), 0.0);
  EXPECT_EQ(j["max_vertices"].get<int>(), 4);
}

}  // namespace
}  // namespace vemstab
