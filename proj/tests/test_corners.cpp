#include <gtest/gtest.h>

#include <cmath>

#include "hygienefeat/corners.hpp"
#include "hygienefeat/imgcore.hpp"
#include "hygienefeat/invariance.hpp"
#include "support.hpp"

using namespace hygienefeat;
using hftest::mirror;
using hftest::Rng;

namespace {

struct Eigen2 {
  double l1;
  double l2;
};

// Jacobi rotation of the symmetric 2x2 matrix [[a, b], [b, c]].
Eigen2 jacobi_eigen(double a, double b, double c) {
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  const double cs = std::cos(theta), sn = std::sin(theta);
  return {a * cs * cs + 2 * b * sn * cs + c * sn * sn,
          a * sn * sn - 2 * b * sn * cs + c * cs * cs};
}

GrayImage white_square() {
  GrayImage img(60, 60);
  for (int y = 20; y < 40; ++y)
    for (int x = 20; x < 40; ++x) img(x, y) = 255;
  return img;
}

double nearest_square_corner(const CornerPoint& c) {
  double best = 1e9;
  for (double cx : {19.5, 39.5})
    for (double cy : {19.5, 39.5}) best = std::min(best, std::hypot(c.x - cx, c.y - cy));
  return best;
}

}  // namespace

TEST(StructureTensor, ConstantImageIsZero) {
  const StructureTensorField f = structure_tensor(GrayImage(10, 10, 120), 1.0);
  for (double v : f.ixx.data()) EXPECT_EQ(v, 0.0);
  for (double v : f.ixy.data()) EXPECT_EQ(v, 0.0);
  for (double v : f.iyy.data()) EXPECT_EQ(v, 0.0);
}

TEST(StructureTensor, VerticalEdge) {
  GrayImage img(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) img(x, y) = 255;
  const StructureTensorField f = structure_tensor(img, 1.0);
  for (int y = 0; y < 16; ++y) {
    for (int x : {7, 8}) {
      EXPECT_GT(f.ixx(x, y), 0.0);
      EXPECT_NEAR(f.iyy(x, y), 0.0, 1e-12);
      EXPECT_NEAR(f.ixy(x, y), 0.0, 1e-12);
    }
  }
}

TEST(StructureTensor, MatchesWindowedSumOracle) {
  Rng rng(12);
  const GrayImage img = hftest::random_gray(12, 12, rng);
  const double sigma = 1.0;
  const StructureTensorField f = structure_tensor(img, sigma);

  // Sobel on [0, 1] intensities, then a direct 2-D Gaussian-weighted sum.
  FloatImage gx(12, 12), gy(12, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      auto p = [&](int i, int j) { return img(mirror(x + i, 12), mirror(y + j, 12)) / 255.0; };
      gx(x, y) = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
      gy(x, y) = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
    }
  const int r = 3;
  double z = 0.0;
  for (int d = -r; d <= r; ++d) z += std::exp(-d * d / 2.0);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      double sxx = 0, sxy = 0, syy = 0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) {
          const double wgt = std::exp(-(i * i + j * j) / 2.0) / (z * z);
          const int u = mirror(x + i, 12), v = mirror(y + j, 12);
          sxx += wgt * gx(u, v) * gx(u, v);
          sxy += wgt * gx(u, v) * gy(u, v);
          syy += wgt * gy(u, v) * gy(u, v);
        }
      EXPECT_NEAR(f.ixx(x, y), sxx, 1e-6);
      EXPECT_NEAR(f.ixy(x, y), sxy, 1e-6);
      EXPECT_NEAR(f.iyy(x, y), syy, 1e-6);
      EXPECT_GE(f.ixx(x, y), 0.0);
      EXPECT_GE(f.iyy(x, y), 0.0);
      EXPECT_LE(f.ixy(x, y) * f.ixy(x, y), f.ixx(x, y) * f.iyy(x, y) + 1e-6);
    }
}

TEST(Responses, ZeroFieldAndIdealEdge) {
  StructureTensorField zero{FloatImage(4, 4), FloatImage(4, 4), FloatImage(4, 4), 1.0};
  const FloatImage rh = harris_response(zero, 0.04);
  const FloatImage rs = shi_tomasi_response(zero);
  for (double v : rh.data()) EXPECT_EQ(v, 0.0);
  for (double v : rs.data()) EXPECT_EQ(v, 0.0);

  StructureTensorField edge{FloatImage(1, 1, 3.0), FloatImage(1, 1), FloatImage(1, 1), 1.0};
  EXPECT_DOUBLE_EQ(harris_response(edge, 0.04)(0, 0), -0.04 * 9.0);
  EXPECT_EQ(shi_tomasi_response(edge)(0, 0), 0.0);
  EXPECT_THROW(harris_response(edge, 0.3), Error);
}

TEST(Responses, MatchEigenvalueOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const StructureTensorField f =
        structure_tensor(hftest::random_gray(32, 32, rng), 1.0);
    const FloatImage rh = harris_response(f, 0.04);
    const FloatImage rs = shi_tomasi_response(f);
    for (std::size_t i = 0; i < rh.size(); ++i) {
      const Eigen2 e = jacobi_eigen(f.ixx.data()[i], f.ixy.data()[i], f.iyy.data()[i]);
      const double tr = e.l1 + e.l2;
      const double harris = e.l1 * e.l2 - 0.04 * tr * tr;
      const double shi = std::max(0.0, std::min(e.l1, e.l2));
      EXPECT_LE(std::abs(rh.data()[i] - harris), 1e-9 * std::max(std::abs(harris), tr * tr));
      EXPECT_LE(std::abs(rs.data()[i] - shi), 1e-9 * std::max(shi, tr));
      EXPECT_LE(rh.data()[i], e.l1 * e.l2 + 1e-12);
    }
  }
}

TEST(Detect, ZeroResponseGivesNothing) {
  EXPECT_TRUE(detect_corners(FloatImage(8, 8), {}).empty());
}

TEST(Detect, FlatAndRampImagesGiveNoCorners) {
  GrayImage ramp_x(30, 30), ramp_y(30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) {
      ramp_x(x, y) = static_cast<std::uint8_t>(7 * x);
      ramp_y(x, y) = static_cast<std::uint8_t>(5 * y);
    }
  for (CornerMethod m : {CornerMethod::Harris, CornerMethod::ShiTomasi}) {
    EXPECT_TRUE(find_corners(GrayImage(30, 30, 90), m).empty());
    EXPECT_TRUE(find_corners(ramp_x, m).empty());
    EXPECT_TRUE(find_corners(ramp_y, m).empty());
  }
}

TEST(Detect, DiagonalRampOnlyRespondsAtTheFrame) {
  // The mirror border flattens the gradient on the outermost ring, so the
  // frame is the only place where a diagonal ramp varies in two directions.
  GrayImage ramp(30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) ramp(x, y) = static_cast<std::uint8_t>(4 * x + 3 * y);
  for (CornerMethod m : {CornerMethod::Harris, CornerMethod::ShiTomasi}) {
    for (const CornerPoint& c : find_corners(ramp, m)) {
      EXPECT_TRUE(c.x == 0 || c.y == 0 || c.x == 29 || c.y == 29) << c.x << "," << c.y;
    }
  }
}

TEST(Detect, WhiteSquareHasFourCorners) {
  for (CornerMethod m : {CornerMethod::Harris, CornerMethod::ShiTomasi}) {
    const auto corners = find_corners(white_square(), m);
    ASSERT_EQ(corners.size(), 4u);
    for (const CornerPoint& c : corners) EXPECT_LE(nearest_square_corner(c), 2.0);
  }
}

TEST(Detect, WhiteSquareAgreesWithExhaustiveMaxima) {
  const CornerConfig cfg;
  const FloatImage r = corner_response(white_square(), CornerMethod::Harris, cfg);
  double peak = 0;
  for (double v : r.data()) peak = std::max(peak, v);
  int strict_maxima = 0;
  for (int y = 1; y < 59; ++y)
    for (int x = 1; x < 59; ++x) {
      if (r(x, y) < cfg.quality_level * peak) continue;
      bool strict = true;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
          if ((i || j) && r(x + i, y + j) >= r(x, y)) strict = false;
      strict_maxima += strict;
    }
  EXPECT_EQ(strict_maxima, 4);
}

TEST(Detect, GreedyMinDistanceKeepsEarlierPeak) {
  FloatImage r(20, 20);
  r(3, 4) = 1.0;
  r(8, 4) = 1.0;
  CornerConfig cfg;
  cfg.min_distance = 10;
  const auto corners = detect_corners(r, cfg);
  ASSERT_EQ(corners.size(), 1u);
  EXPECT_EQ(corners[0].x, 3);
  EXPECT_EQ(corners[0].y, 4);
}

TEST(Detect, OutputProperties) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const FloatImage r = hftest::random_float(40, 30, rng);
    CornerConfig cfg;
    cfg.min_distance = rng.integer(0, 8);
    cfg.max_corners = rng.integer(1, 60);
    cfg.quality_level = 0.5;
    const auto corners = detect_corners(r, cfg);
    EXPECT_LE(static_cast<int>(corners.size()), cfg.max_corners);
    const double t = corner_threshold(r, cfg);
    for (std::size_t i = 0; i < corners.size(); ++i) {
      EXPECT_GE(corners[i].response, t);
      if (i) EXPECT_GE(corners[i - 1].response, corners[i].response);
      for (std::size_t j = 0; j < i; ++j)
        EXPECT_GE(std::hypot(corners[i].x - corners[j].x, corners[i].y - corners[j].y),
                  cfg.min_distance);
    }
  }
}

TEST(Detect, QuarterTurnEquivariance) {
  Rng rng(51);
  GrayImage img(48, 40);
  // 4x4 blocks give well separated corner responses.
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 48; ++x) img(x, y) = static_cast<std::uint8_t>((x / 4 * 37 + y / 4 * 91) % 251);
  for (int by = 0; by < 10; ++by)
    for (int bx = 0; bx < 12; ++bx) {
      const auto v = static_cast<std::uint8_t>(rng.integer(0, 255));
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img(bx * 4 + x, by * 4 + y) = v;
    }
  const GrayImage rot = warp_image(img, Transform::rotation(90));
  CornerConfig cfg;
  cfg.min_distance = 0;
  cfg.max_corners = 10000;
  for (CornerMethod m : {CornerMethod::Harris, CornerMethod::ShiTomasi}) {
    const auto a = find_corners(img, m, cfg);
    const auto b = find_corners(rot, m, cfg);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a.size(), b.size());
    for (const CornerPoint& c : a) {
      const int mx = img.height() - 1 - c.y, my = c.x;
      const bool found = std::any_of(b.begin(), b.end(), [&](const CornerPoint& d) {
        return std::abs(d.x - mx) <= 1 && std::abs(d.y - my) <= 1;
      });
      EXPECT_TRUE(found) << c.x << "," << c.y;
    }
  }
}

TEST(Mark, Blocks) {
  const RasterImage img(11, 11, 1, 40);
  EXPECT_EQ(mark_corners(img, {}), to_rgb(img));

  const std::vector<CornerPoint> centre = {{5, 5, 1.0}};
  const RasterImage m = mark_corners(img, centre);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      const bool in = std::abs(x - 5) <= 2 && std::abs(y - 5) <= 2;
      EXPECT_EQ(m.at(x, y, 0), in ? 255 : 40);
      EXPECT_EQ(m.at(x, y, 1), in ? 0 : 40);
    }

  const std::vector<CornerPoint> origin = {{0, 0, 1.0}};
  const RasterImage o = mark_corners(img, origin);
  int red = 0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) red += o.at(x, y, 0) == 255;
  EXPECT_EQ(red, 9);
}

TEST(Config, Validation) {
  CornerConfig cfg;
  cfg.harris_k = 0.25;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.max_corners = 0;
  EXPECT_THROW(validate(cfg), Error);
}
