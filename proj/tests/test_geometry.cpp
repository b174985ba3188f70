#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vemstab/geometry.hpp"
#include "vemstab/rng.hpp"
#include "test_util.hpp"

namespace vemstab {
namespace {

std::vector<Vec2> unit_square() {
  return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
}

TEST(Geometry, ShoelaceAreaAndCentroid) {
  const auto sq = unit_square();
  EXPECT_NEAR(polygon_signed_area(sq), 1.0, 1e-15);
  const Vec2 c = polygon_centroid(sq);
  EXPECT_NEAR(c.x(), 0.5, 1e-15);
  EXPECT_NEAR(c.y(), 0.5, 1e-15);

  std::vector<Vec2> cw(sq.rbegin(), sq.rend());
  EXPECT_NEAR(polygon_signed_area(cw), -1.0, 1e-15);
}

TEST(Geometry, CentroidOfLShape) {
  // Two axis-aligned rectangles: [0,2]x[0,1] and [0,1]x[1,2].
  const std::vector<Vec2> l = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  EXPECT_NEAR(polygon_signed_area(l), 3.0, 1e-14);
  const Vec2 c = polygon_centroid(l);
  EXPECT_NEAR(c.x(), (2.0 * 1.0 + 1.0 * 0.5) / 3.0, 1e-14);
  EXPECT_NEAR(c.y(), (2.0 * 0.5 + 1.0 * 1.5) / 3.0, 1e-14);
}

TEST(Geometry, Diameter) {
  EXPECT_NEAR(polygon_diameter(unit_square()), std::sqrt(2.0), 1e-15);
}

TEST(Geometry, PointSegmentDistance) {
  EXPECT_NEAR(point_segment_distance({0.5, 1.0}, {0.0, 0.0}, {1.0, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(point_segment_distance({2.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(point_segment_distance({0.3, 0.0}, {0.0, 0.0}, {1.0, 0.0}), 0.0, 1e-15);
}

TEST(Geometry, SimplePolygonDetection) {
  EXPECT_TRUE(polygon_is_simple(unit_square()));
  const std::vector<Vec2> bowtie = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  EXPECT_FALSE(polygon_is_simple(bowtie));
}

TEST(Geometry, InscribedRadiusOfSquare) {
  const auto sq = unit_square();
  EXPECT_NEAR(centered_inscribed_radius({0.5, 0.5}, sq), 0.5, 1e-15);
  EXPECT_EQ(centered_inscribed_radius({2.0, 0.5}, sq), 0.0);  // outside
}

// Fan identity about any center: signed triangle areas sum to the shoelace
// area regardless of the chosen apex (convex or not).
TEST(Geometry, FanAreasSumToShoelaceFromAnyCenter) {
  std::mt19937_64 rng(11);
  auto check = [](const std::vector<Vec2>& poly, const Vec2& center) {
    double acc = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = poly[i] - center;
      const Vec2 b = poly[(i + 1) % n] - center;
      acc += 0.5 * (a.x() * b.y() - b.x() * a.y());
    }
    EXPECT_NEAR(acc, polygon_signed_area(poly), 1e-12 * std::abs(polygon_signed_area(poly)) + 1e-14);
  };
  const std::vector<Vec2> l = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  check(l, polygon_centroid(l));
  check(l, {7.0, -3.0});  // even an exterior apex satisfies the signed identity
  for (int k = 0; k < 50; ++k) {
    const auto poly = testing::random_polygon(rng);
    check(poly, polygon_centroid(poly));
    check(poly, {uniform_pm(rng, 2.0), uniform_pm(rng, 2.0)});
  }
}

TEST(Ellipse, SquareGivesCircumscribedCircle) {
  const std::vector<Vec2> pts = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const Ellipse e = min_enclosing_ellipse(pts);
  EXPECT_NEAR(e.center.x(), 0.0, 1e-7);
  EXPECT_NEAR(e.center.y(), 0.0, 1e-7);
  EXPECT_NEAR(e.r_major, std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(e.r_minor, std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(e.aspect(), 1.0, 1e-6);
}

TEST(Ellipse, RectangleSemiAxes) {
  // For corner points (+-a, +-b) the minimum-area ellipse is
  // (x/a)^2 + (y/b)^2 <= 2, i.e. semi-axes a*sqrt(2), b*sqrt(2).
  const double a = 1.0, b = 0.5;
  const std::vector<Vec2> pts = {{-a, -b}, {a, -b}, {a, b}, {-a, b}};
  const Ellipse e = min_enclosing_ellipse(pts);
  EXPECT_NEAR(e.r_major, a * std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(e.r_minor, b * std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(e.aspect(), 2.0, 1e-6);
}

TEST(Ellipse, TranslationInvariance) {
  const std::vector<Vec2> pts = {{-1, -0.5}, {1, -0.5}, {1, 0.5}, {-1, 0.5}};
  std::vector<Vec2> shifted;
  const Vec2 shift(17.0, -4.0);
  for (const Vec2& p : pts) shifted.push_back(p + shift);
  const Ellipse e0 = min_enclosing_ellipse(pts);
  const Ellipse e1 = min_enclosing_ellipse(shifted);
  EXPECT_NEAR((e1.center - e0.center - shift).norm(), 0.0, 1e-6);
  EXPECT_NEAR(e1.r_major, e0.r_major, 1e-7);
  EXPECT_NEAR(e1.r_minor, e0.r_minor, 1e-7);
}

TEST(Ellipse, ContainmentAndSupportOnRandomClouds) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 4 + static_cast<int>(rng() % 12);
    std::vector<Vec2> pts;
    for (int i = 0; i < m; ++i)
      pts.push_back({uniform_pm(rng, 1.0), uniform_pm(rng, 1.0)});
    // Guard against near-collinear clouds, which the ellipse rejects.
    double area_proxy = 0.0;
    for (std::size_t i = 2; i < pts.size(); ++i) {
      const Vec2 u = pts[i] - pts[0], v = pts[1] - pts[0];
      area_proxy = std::max(area_proxy, std::abs(u.x() * v.y() - u.y() * v.x()));
    }
    if (area_proxy < 1e-2) continue;

    const Ellipse e = min_enclosing_ellipse(pts);
    double q_max = 0.0;
    for (const Vec2& p : pts) {
      const Vec2 d = p - e.center;
      const double q = d.dot(e.shape * d);
      EXPECT_LE(q, 1.0 + 1e-6);
      q_max = std::max(q_max, q);
    }
    EXPECT_GE(q_max, 1.0 - 1e-6);  // some point supports the ellipse
  }
}

TEST(Ellipse, RejectsDegenerateInput) {
  const std::vector<Vec2> collinear = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  EXPECT_THROW(min_enclosing_ellipse(collinear), std::runtime_error);
  const std::vector<Vec2> two = {{0, 0}, {1, 0}};
  EXPECT_THROW(min_enclosing_ellipse(two), std::invalid_argument);
}

}  // namespace
}  // namespace vemstab
