#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hygienefeat/imgcore.hpp"
#include "hygienefeat/invariance.hpp"
#include "hygienefeat/sift.hpp"
#include "support.hpp"

using namespace hygienefeat;
using hftest::Rng;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GrayImage blob_image(int size, double cx, double cy, double sigma) {
  GrayImage img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      img(x, y) = to_byte(255.0 * std::exp(-d2 / (2 * sigma * sigma)));
    }
  return img;
}

double norm(const SiftDescriptor& d) {
  double s = 0;
  for (double v : d.values) s += v * v;
  return std::sqrt(s);
}

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

}  // namespace

TEST(Pyramid, GeometryForSmallInput) {
  const ScaleSpacePyramid p = build_pyramid(GrayImage(64, 64, 10));
  ASSERT_EQ(p.octave_count(), 5);
  EXPECT_EQ(p.images[0][0].width(), 128);
  EXPECT_EQ(p.images[0][0].height(), 128);
  for (int o = 0; o < p.octave_count(); ++o) {
    EXPECT_EQ(p.images[o].size(), 6u);
    for (const FloatImage& im : p.images[o]) {
      EXPECT_EQ(im.width(), p.images[o][0].width());
      EXPECT_EQ(im.height(), p.images[o][0].height());
    }
    if (o > 0) {
      EXPECT_EQ(p.images[o][0].width(), p.images[o - 1][0].width() / 2);
      EXPECT_NEAR(p.sigmas[o][0], 2 * p.sigmas[o - 1][0], 1e-12);
    }
  }
  EXPECT_NEAR(p.sigmas[0][3], 2 * 1.6, 1e-12);
}

TEST(Pyramid, ConstantImageStaysConstant) {
  const ScaleSpacePyramid p = build_pyramid(GrayImage(40, 40, 128));
  for (const auto& octave : p.images)
    for (const FloatImage& im : octave)
      for (double v : im.data()) EXPECT_NEAR(v, 128.0 / 255.0, 1e-12);
  const DoGPyramid d = dog_pyramid(p);
  for (const auto& octave : d.images)
    for (const FloatImage& im : octave)
      for (double v : im.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_TRUE(detect_keypoints(GrayImage(40, 40, 128)).empty());
}

TEST(Pyramid, RejectsTinyImages) {
  EXPECT_THROW(build_pyramid(GrayImage(8, 8)), Error);
}

TEST(DoG, DifferenceIdentity) {
  Rng rng(6);
  const ScaleSpacePyramid p = build_pyramid(hftest::random_gray(48, 40, rng));
  const DoGPyramid d = dog_pyramid(p);
  ASSERT_EQ(d.images.size(), p.images.size());
  for (std::size_t o = 0; o < d.images.size(); ++o) {
    ASSERT_EQ(d.images[o].size(), p.images[o].size() - 1);
    for (std::size_t i = 0; i < d.images[o].size(); ++i) {
      auto dv = d.images[o][i].data();
      auto g0 = p.images[o][i].data();
      auto g1 = p.images[o][i + 1].data();
      for (std::size_t k = 0; k < dv.size(); ++k) {
        EXPECT_EQ(dv[k], g1[k] - g0[k]);
        EXPECT_NEAR(dv[k] + g0[k], g1[k], 1e-15);
      }
    }
  }
}

TEST(Extrema, BlobIsFoundAtItsScale) {
  const GrayImage img = blob_image(128, 64, 64, 4.0);
  const auto kps = detect_keypoints(img);
  const bool found = std::any_of(kps.begin(), kps.end(), [](const SiftKeypoint& k) {
    return std::hypot(k.x - 64, k.y - 64) <= 2.0 && k.sigma >= 2.5 && k.sigma <= 6.5;
  });
  EXPECT_TRUE(found);
  for (const SiftKeypoint& k : kps) {
    EXPECT_GE(k.orientation, 0.0);
    EXPECT_LT(k.orientation, kTwoPi);
  }
}

TEST(Extrema, StepEdgeIsRejected) {
  GrayImage img(128, 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 64; x < 128; ++x) img(x, y) = 255;
  const ScaleSpacePyramid p = build_pyramid(img);
  EXPECT_TRUE(detect_extrema(dog_pyramid(p), p).empty());
}

TEST(Extrema, SurvivorsPassContrastAndEdgeTests) {
  const SiftConfig cfg;
  const GrayImage img = synthetic_texture(128, 3);
  const ScaleSpacePyramid p = build_pyramid(img, cfg);
  const DoGPyramid d = dog_pyramid(p);
  const auto kps = detect_extrema(d, p, cfg);
  ASSERT_FALSE(kps.empty());
  for (const SiftKeypoint& k : kps) {
    EXPECT_GE(k.response, cfg.contrast_threshold);
    const FloatImage& im = d.images[k.octave][k.layer];
    const int x = static_cast<int>(std::lround(k.octave_x));
    const int y = static_cast<int>(std::lround(k.octave_y));
    const double dxx = im(x + 1, y) + im(x - 1, y) - 2 * im(x, y);
    const double dyy = im(x, y + 1) + im(x, y - 1) - 2 * im(x, y);
    const double dxy = (im(x + 1, y + 1) - im(x + 1, y - 1) - im(x - 1, y + 1) +
                        im(x - 1, y - 1)) / 4;
    const double det = dxx * dyy - dxy * dxy;
    const double tr = dxx + dyy;
    EXPECT_GT(det, 0.0);
    EXPECT_LT(tr * tr / det, (cfg.edge_r + 1) * (cfg.edge_r + 1) / cfg.edge_r);
  }
}

TEST(Orientation, EqualPeaksBothReported) {
  std::vector<double> hist(36, 0.0);
  hist[5] = 10.0;
  hist[20] = 10.0;
  const auto peaks = orientation_peaks(hist, 0.8);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks[0], 5 * kTwoPi / 36, 1e-12);
  EXPECT_NEAR(peaks[1], 20 * kTwoPi / 36, 1e-12);
}

TEST(Orientation, FlatPatchIsDegenerate) {
  const ScaleSpacePyramid p = build_pyramid(GrayImage(64, 64, 50));
  SiftKeypoint kp;
  kp.octave = 1;
  kp.layer = 1;
  kp.octave_x = 30;
  kp.octave_y = 30;
  kp.octave_sigma = 2.0;
  EXPECT_THROW(assign_orientations(p, kp), Error);
}

TEST(Orientation, QuarterTurnShiftsByHalfPi) {
  const GrayImage img = synthetic_texture(160, 5);
  const GrayImage rot = warp_image(img, Transform::rotation(90));
  const auto a = detect_keypoints(img);
  const auto b = detect_keypoints(rot);
  int compared = 0;
  for (const SiftKeypoint& k : a) {
    const double mx = img.height() - 1 - k.y, my = k.x;
    bool located = false, oriented = false;
    for (const SiftKeypoint& q : b) {
      if (std::hypot(q.x - mx, q.y - my) > 0.25 || std::abs(q.sigma / k.sigma - 1) > 0.01)
        continue;
      located = true;
      if (angle_gap(q.orientation, k.orientation + std::numbers::pi / 2) < 0.1) oriented = true;
    }
    if (!located) continue;
    ++compared;
    EXPECT_TRUE(oriented) << k.x << "," << k.y;
  }
  EXPECT_GT(compared, static_cast<int>(a.size()) / 2);
}

TEST(Descriptor, UnitNormNonNegative) {
  const SiftFeatures f = detect_and_describe(synthetic_texture(128, 9));
  ASSERT_FALSE(f.descriptors.empty());
  ASSERT_EQ(f.descriptors.size(), f.keypoints.size());
  for (const SiftDescriptor& d : f.descriptors) {
    EXPECT_EQ(d.values.size(), 128u);
    EXPECT_NEAR(norm(d), 1.0, 1e-6);
    for (double v : d.values) EXPECT_GE(v, 0.0);
  }
}

TEST(Descriptor, GainInvariant) {
  // Even intensities up to 170: a 1.5 gain stays exact and unclamped.
  const GrayImage src = synthetic_texture(128, 13);
  GrayImage base(128, 128), bright(128, 128);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const int v = (src.data()[i] * 170 / 255) & ~1;
    base.data()[i] = static_cast<std::uint8_t>(v);
    bright.data()[i] = static_cast<std::uint8_t>(v * 3 / 2);
  }
  const SiftFeatures f = detect_and_describe(base);
  ASSERT_FALSE(f.keypoints.empty());
  const ScaleSpacePyramid p = build_pyramid(bright);
  for (std::size_t i = 0; i < f.keypoints.size(); ++i) {
    const SiftDescriptor d = compute_descriptor(p, f.keypoints[i]);
    for (int j = 0; j < 128; ++j) EXPECT_NEAR(d.values[j], f.descriptors[i].values[j], 1e-3);
  }
}

TEST(Descriptor, WindowOutsideImage) {
  const ScaleSpacePyramid p = build_pyramid(synthetic_texture(64, 1));
  SiftKeypoint kp;
  kp.octave = 0;
  kp.layer = 1;
  kp.octave_x = 2;
  kp.octave_y = 60;
  kp.octave_sigma = 3.0;
  try {
    compute_descriptor(p, kp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfImage);
  }
}

TEST(Match, SelfAndEmpty) {
  const SiftFeatures f = detect_and_describe(synthetic_texture(128, 21));
  const auto self = match_descriptors(f.descriptors, f.descriptors);
  ASSERT_FALSE(f.descriptors.empty());
  EXPECT_EQ(self.size(), f.descriptors.size());
  for (const auto& [i, j] : self) EXPECT_EQ(i, j);
  EXPECT_TRUE(match_descriptors(f.descriptors, {}).empty());
}

TEST(Match, AgreesWithExhaustiveRatioTest) {
  Rng rng(77);
  auto random_set = [&](int n) {
    std::vector<SiftDescriptor> out(n);
    for (auto& d : out) {
      double s = 0;
      for (double& v : d.values) {
        v = rng.uniform();
        s += v * v;
      }
      for (double& v : d.values) v /= std::sqrt(s);
    }
    return out;
  };
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_set(20);
    auto b = random_set(20);
    for (int i = 0; i < 5; ++i) {
      b[i] = a[i * 3];
      b[i].values[i] += 0.01;
    }
    std::vector<std::pair<std::size_t, std::size_t>> want;
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> dist;
      for (std::size_t j = 0; j < b.size(); ++j) {
        double s = 0;
        for (int k = 0; k < 128; ++k) s += std::pow(a[i].values[k] - b[j].values[k], 2);
        dist.emplace_back(std::sqrt(s), j);
      }
      std::sort(dist.begin(), dist.end());
      if (dist[0].first < 0.8 * dist[1].first) want.emplace_back(i, dist[0].second);
    }
    EXPECT_EQ(match_descriptors(a, b), want);
    EXPECT_GE(want.size(), 5u);
  }
}

TEST(Keypoints, ThreadCountDoesNotChangeResults) {
  const GrayImage img = synthetic_texture(128, 2);
  set_thread_count(1);
  const SiftFeatures a = detect_and_describe(img);
  set_thread_count(4);
  const SiftFeatures b = detect_and_describe(img);
  set_thread_count(1);
  ASSERT_EQ(a.keypoints.size(), b.keypoints.size());
  for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
    EXPECT_EQ(a.keypoints[i].x, b.keypoints[i].x);
    EXPECT_EQ(a.keypoints[i].orientation, b.keypoints[i].orientation);
    EXPECT_EQ(a.descriptors[i].values, b.descriptors[i].values);
  }
}
