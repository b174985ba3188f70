#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "vemstab/stab_decoupled.hpp"
#include "vemstab/meshgen.hpp"
#include "test_util.hpp"

namespace vemstab {
namespace {

TEST(StabDecoupled, FrameOnAnAxisAlignedRectangle) {
  const FrameData fd = frame_data(element_ops(rectangle_cell(2.0, 1.0)));
  EXPECT_NEAR(fd.second_moment(0, 0), 4.0, 1e-12);
  EXPECT_NEAR(fd.second_moment(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(fd.second_moment(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(fd.moment_major, 4.0, 1e-12);
  EXPECT_NEAR(fd.moment_minor, 1.0, 1e-12);
  EXPECT_NEAR(fd.aspect, 2.0, 1e-12);
  EXPECT_NEAR(std::abs(fd.frame(0, 0)), 1.0, 1e-12);  // major axis along x
  EXPECT_NEAR(std::abs(fd.frame(1, 1)), 1.0, 1e-12);
}

TEST(StabDecoupled, FrameFollowsARotatedRectangle) {
  const double theta = 0.5;
  const Mat2 rot = Eigen::Rotation2Dd(theta).toRotationMatrix();
  const PolyMesh rect = rectangle_cell(3.0, 1.0);
  std::vector<Vec2> coords;
  for (const Vec2& x : rect.vertices) coords.push_back(rot * x);
  const FrameData fd = frame_data(coords);
  EXPECT_NEAR(fd.aspect, 3.0, 1e-10);
  const Vec2 expected_major = rot * Vec2(1.0, 0.0);
  EXPECT_NEAR(std::abs(fd.frame.col(0).dot(expected_major)), 1.0, 1e-10);
}

TEST(StabDecoupled, FrameRejectsCollinearPoints) {
  const std::vector<Vec2> line = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}};
  EXPECT_THROW(frame_data(line), NumericalError);
}

TEST(StabDecoupled, AnisotropyWeightsFollowTheBoundedPowerLaw) {
  DecoupledConfig cfg;  // beta = 1, g_max = 4
  auto [t1, t2] = anisotropy_weights(2.0, cfg);
  EXPECT_NEAR(t1, 2.0, 1e-15);
  EXPECT_NEAR(t2, 0.5, 1e-15);

  cfg.beta = 0.5;
  std::tie(t1, t2) = anisotropy_weights(2.0, cfg);
  EXPECT_NEAR(t1, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(t2, 1.0 / std::sqrt(2.0), 1e-15);

  cfg.beta = 1.0;
  std::tie(t1, t2) = anisotropy_weights(16.0, cfg);  // capped
  EXPECT_NEAR(t1, 4.0, 1e-15);
  EXPECT_NEAR(t2, 0.25, 1e-15);
}

TEST(StabDecoupled, ConfigValidationRejectsBadValues) {
  DecoupledConfig cfg;
  cfg.beta = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.beta = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.beta = 1.0;
  cfg.g_max = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.g_max = 4.0;
  cfg.kappa_mode = DecoupledConfig::Kappa::constant_value;
  cfg.kappa_value = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(StabDecoupled, DefaultVolumetricPolicySwitchesNearIncompressibility) {
  const MaterialParams compressible = lame_from(200.0, 0.3);
  const DecoupledConfig a = default_decoupled_config(compressible);
  EXPECT_EQ(a.kappa_mode, DecoupledConfig::Kappa::constant_value);
  EXPECT_NEAR(kappa_for(a, compressible), bulk_modulus(compressible), 1e-12);

  const MaterialParams nearly = params_from_mu_poisson(40.0, 0.499);
  EXPECT_EQ(default_decoupled_config(nearly).kappa_mode, DecoupledConfig::Kappa::zero);
  EXPECT_EQ(kappa_for(default_decoupled_config(nearly), nearly), 0.0);

  const MaterialParams boundary = lame_from(200.0, 0.49);
  EXPECT_EQ(default_decoupled_config(boundary).kappa_mode, DecoupledConfig::Kappa::zero);

  DecoupledConfig capped;
  capped.kappa_mode = DecoupledConfig::Kappa::capped;
  capped.kappa_cap = 5.0;
  EXPECT_NEAR(kappa_for(capped, compressible), 5.0, 1e-15);
  capped.kappa_cap = 1e12;
  EXPECT_NEAR(kappa_for(capped, compressible), bulk_modulus(compressible), 1e-12);
}

TEST(StabDecoupled, SquareDeviatoricMatrixIsHalfShearTimesResidual) {
  const ElementOps ops = element_ops(unit_square_cell());
  const DecoupledConfig cfg;
  const Eigen::MatrixXd s = build_s_dev(ops, frame_data(ops), 100.0, cfg);
  // Unit square: area/diameter^2 = 1/2, isotropic weights, and the residual
  // projector is symmetric and idempotent, so s has to equal (mu/2) resid.
  EXPECT_NEAR((s - 50.0 * ops.resid).norm(), 0.0, 1e-12 * s.norm());
}

TEST(StabDecoupled, RectangleKernelEigenvaluesFollowTheAnisotropyWeights) {
  const double mu = 37.0;
  for (const double w : {1.5, 2.0, 3.0}) {
    const ElementOps ops = element_ops(rectangle_cell(w, 1.0));
    DecoupledConfig cfg;
    cfg.beta = 1.0;
    cfg.g_max = 10.0;
    const Eigen::MatrixXd s = build_s_dev(ops, frame_data(ops), mu, cfg);
    const Eigen::MatrixXd sk = ops.kernel.transpose() * s * ops.kernel;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sk);
    ASSERT_EQ(es.eigenvalues().size(), 2);
    const double scale = mu * ops.metrics.area / std::pow(ops.metrics.diameter, 2);
    EXPECT_NEAR(es.eigenvalues()(0), scale / w, 1e-10 * scale);
    EXPECT_NEAR(es.eigenvalues()(1), scale * w, 1e-10 * scale);
    EXPECT_NEAR(es.eigenvalues()(1) / es.eigenvalues()(0), w * w, 1e-8 * w * w);
  }
}

TEST(StabDecoupled, VolumetricMatrixVanishesOnRectangles) {
  // Rectangle kernels are pure alternating (hourglass) modes, whose
  // edge-averaged residual vanishes, so every volumetric row is zero.
  for (const PolyMesh& mesh : {unit_square_cell(), rectangle_cell(2.0, 1.0)}) {
    const ElementOps ops = element_ops(mesh);
    const Eigen::MatrixXd s = build_s_vol(ops, 123.0);
    EXPECT_NEAR(s.norm(), 0.0, 1e-13);
    for (int e = 0; e < ops.num_vertices; ++e)
      EXPECT_NEAR(edge_normal_residual_row(ops, e).norm(), 0.0, 1e-14);
  }
}

TEST(StabDecoupled, HexagonVolumetricMatrixIsActiveButRankDeficient) {
  const ElementOps ops = element_ops(regular_polygon_cell(6));
  const Eigen::MatrixXd s = build_s_vol(ops, 1.0);
  EXPECT_GT(s.norm(), 1e-3);

  // The length-weighted sum of the edge rows is annihilated by the gradient
  // identity, so the form cannot have full rank on the six-dim kernel.
  Eigen::RowVectorXd weighted_sum = Eigen::RowVectorXd::Zero(ops.dofs());
  for (int e = 0; e < ops.num_vertices; ++e)
    weighted_sum += ops.metrics.edge_lengths[e] * edge_normal_residual_row(ops, e);
  EXPECT_NEAR(weighted_sum.norm(), 0.0, 1e-12);

  const Eigen::MatrixXd sk = ops.kernel.transpose() * s * ops.kernel;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sk);
  EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-12 * es.eigenvalues().maxCoeff());
  EXPECT_GT(es.eigenvalues().maxCoeff(), 1e-3);
}

TEST(StabDecoupled, HexagonDeviatoricKernelSpectrumIsFlat) {
  const double mu = 40.0;
  const ElementOps ops = element_ops(regular_polygon_cell(6));
  const Eigen::MatrixXd s = build_s_dev(ops, frame_data(ops), mu, DecoupledConfig{});
  const Eigen::MatrixXd sk = ops.kernel.transpose() * s * ops.kernel;
  const double expected = mu * ops.metrics.area / std::pow(ops.metrics.diameter, 2);
  // Area 3 sqrt(3)/2, diameter 2: every kernel eigenvalue is mu 3 sqrt(3)/8.
  EXPECT_NEAR(expected, mu * 3.0 * std::sqrt(3.0) / 8.0, 1e-12 * expected);
  EXPECT_NEAR((sk - expected * Eigen::MatrixXd::Identity(6, 6)).norm(), 0.0, 1e-10 * expected);
}

TEST(StabDecoupled, RandomPolygonsGiveSymmetricPsdAffineFreeMatrices) {
  std::mt19937_64 rng(51);
  const MaterialParams mp = lame_from(200.0, 0.3);
  DecoupledConfig cfg = default_decoupled_config(mp);
  for (int trial = 0; trial < 100; ++trial) {
    const ElementOps ops = testing::random_element(rng, 4, 10);
    const StabMatrices m = decoupled_matrices(ops, mp, cfg);
    const Eigen::MatrixXd s = m.s_dev + m.s_vol;
    EXPECT_NEAR((s - s.transpose()).norm(), 0.0, 1e-13 * (s.norm() + 1.0));

    const Eigen::VectorXd u = testing::affine_dofs(
        ops.coords, testing::random_matrix(rng, 0.5), Vec2(uniform_pm(rng, 1.0), 0.3));
    EXPECT_NEAR((s * u).norm(), 0.0, 1e-10 * s.norm() * (u.norm() + 1.0));

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());

    // Deviatoric kernel eigenvalues are sandwiched by the anisotropy weights.
    const auto [t1, t2] = anisotropy_weights(frame_data(ops).aspect, cfg);
    const double scale = mp.mu * ops.metrics.area / std::pow(ops.metrics.diameter, 2);
    const Eigen::MatrixXd dk = ops.kernel.transpose() * m.s_dev * ops.kernel;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> des(dk);
    EXPECT_GE(des.eigenvalues().minCoeff(), scale * t2 * (1.0 - 1e-9));
    EXPECT_LE(des.eigenvalues().maxCoeff(), scale * t1 * (1.0 + 1e-9));
  }
}

TEST(StabDecoupled, EnergyResidualAndTangentAreOneQuadraticForm) {
  std::mt19937_64 rng(52);
  const MaterialParams mp = lame_from(200.0, 0.3);
  const DecoupledConfig cfg = default_decoupled_config(mp);
  for (int trial = 0; trial < 20; ++trial) {
    const ElementOps ops = testing::random_element(rng, 4, 10);
    const StabMatrices m = decoupled_matrices(ops, mp, cfg);
    const Eigen::MatrixXd s = m.s_dev + m.s_vol;
    const Eigen::VectorXd u = testing::random_vector(rng, ops.dofs(), 1.0);
    EXPECT_NEAR(decoupled_energy(ops, u, m), 0.5 * u.dot(s * u),
                1e-11 * (std::abs(0.5 * u.dot(s * u)) + 1.0));
    EXPECT_NEAR((decoupled_residual(ops, u, m) - s * u).norm(), 0.0, 1e-12 * (s * u).norm());
    EXPECT_NEAR((decoupled_tangent(ops, u, m) - s).norm(), 0.0, 1e-15 * s.norm());

    // Affine states carry machine-zero energy through the residual route.
    const Eigen::VectorXd a = testing::affine_dofs(
        ops.coords, testing::random_matrix(rng, 0.5), Vec2(0.2, -0.4));
    EXPECT_NEAR(decoupled_energy(ops, a, m), 0.0, 1e-18);
  }
}

TEST(StabDecoupled, MatricesScaleLinearlyInShearModulus) {
  std::mt19937_64 rng(53);
  const ElementOps ops = testing::random_element(rng, 5, 9);
  const FrameData fd = frame_data(ops);
  const DecoupledConfig cfg;
  const Eigen::MatrixXd s1 = build_s_dev(ops, fd, 10.0, cfg);
  const Eigen::MatrixXd s2 = build_s_dev(ops, fd, 20.0, cfg);
  EXPECT_NEAR((s2 - 2.0 * s1).norm(), 0.0, 1e-14 * s1.norm());
  EXPECT_THROW(build_s_dev(ops, fd, 0.0, cfg), ConfigError);
  EXPECT_THROW(build_s_dev(ops, fd, -1.0, cfg), ConfigError);
}

TEST(StabDecoupled, MatricesAreInvariantUnderUniformRescaling) {
  std::mt19937_64 rng(54);
  const MaterialParams mp = lame_from(200.0, 0.3);
  const DecoupledConfig cfg = default_decoupled_config(mp);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> coords = testing::random_polygon(rng, 4, 9);
    ElementOps ops;
    try {
      ops = element_ops(coords);
    } catch (const std::exception&) {
      continue;
    }
    std::vector<Vec2> scaled = coords;
    for (Vec2& x : scaled) x *= 250.0;
    const ElementOps big = element_ops(scaled);
    const StabMatrices a = decoupled_matrices(ops, mp, cfg);
    const StabMatrices b = decoupled_matrices(big, mp, cfg);
    EXPECT_NEAR((a.s_dev - b.s_dev).norm(), 0.0, 1e-10 * a.s_dev.norm());
    EXPECT_NEAR((a.s_vol - b.s_vol).norm(), 0.0, 1e-10 * (a.s_vol.norm() + 1.0));
  }
}

}  // namespace
}  // namespace vemstab
