#include "hygienefeat/sift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "hygienefeat/imgcore.hpp"

namespace hygienefeat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 2x upsampling with pixel-centre alignment: output u samples input
// (u + 0.5) / 2 - 0.5.
FloatImage upsample2x(const FloatImage& img) {
  FloatImage out(2 * img.width(), 2 * img.height());
  parallel_for(out.height(), [&](int y) {
    auto row = out.row(y);
    const double sy = (y + 0.5) / 2.0 - 0.5;
    for (int x = 0; x < out.width(); ++x) {
      row[x] = sample_bilinear(img, (x + 0.5) / 2.0 - 0.5, sy);
    }
  });
  return out;
}

// Bilinear halving with pixel-centre alignment: output u samples input
// 2u + 0.5, i.e. the mean of a 2x2 block. Unlike plain decimation this
// commutes with quarter turns of even-sized images.
FloatImage halve2x(const FloatImage& img) {
  FloatImage out(std::max(1, img.width() / 2), std::max(1, img.height() / 2));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out(x, y) = sample_bilinear(img, 2 * x + 0.5, 2 * y + 0.5);
    }
  }
  return out;
}

struct Vec3 {
  double x, y, s;
};

// Solves H * v = rhs by Cramer's rule; false when H is (near) singular.
bool solve3(const double h[3][3], const double rhs[3], double out[3]) {
  const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                     h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                     h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
  if (std::abs(det) < 1e-300 || !std::isfinite(det)) return false;
  for (int c = 0; c < 3; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m[r][k] = (k == c) ? rhs[r] : h[r][k];
    }
    out[c] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
             det;
  }
  return true;
}

bool is_extremum(const std::vector<FloatImage>& dog, int layer, int x, int y) {
  const double v = dog[layer](x, y);
  bool is_max = true;
  bool is_min = true;
  for (int l = layer - 1; l <= layer + 1; ++l) {
    const FloatImage& img = dog[l];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dx == 0 && dy == 0) continue;
        const double n = img(x + dx, y + dy);
        if (n >= v) is_max = false;
        if (n <= v) is_min = false;
        if (!is_max && !is_min) return false;
      }
    }
  }
  return is_max || is_min;
}

void derivatives(const std::vector<FloatImage>& dog, int layer, int x, int y,
                 double grad[3], double hess[3][3]) {
  const FloatImage& prev = dog[layer - 1];
  const FloatImage& cur = dog[layer];
  const FloatImage& next = dog[layer + 1];
  const double v = cur(x, y);
  grad[0] = 0.5 * (cur(x + 1, y) - cur(x - 1, y));
  grad[1] = 0.5 * (cur(x, y + 1) - cur(x, y - 1));
  grad[2] = 0.5 * (next(x, y) - prev(x, y));
  const double dxx = cur(x + 1, y) + cur(x - 1, y) - 2.0 * v;
  const double dyy = cur(x, y + 1) + cur(x, y - 1) - 2.0 * v;
  const double dss = next(x, y) + prev(x, y) - 2.0 * v;
  const double dxy = 0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) -
                             cur(x + 1, y - 1) + cur(x - 1, y - 1));
  const double dxs = 0.25 * (next(x + 1, y) - next(x - 1, y) -
                             prev(x + 1, y) + prev(x - 1, y));
  const double dys = 0.25 * (next(x, y + 1) - next(x, y - 1) -
                             prev(x, y + 1) + prev(x, y - 1));
  hess[0][0] = dxx;
  hess[0][1] = hess[1][0] = dxy;
  hess[0][2] = hess[2][0] = dxs;
  hess[1][1] = dyy;
  hess[1][2] = hess[2][1] = dys;
  hess[2][2] = dss;
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

}  // namespace

void validate(const SiftConfig& cfg) {
  if (cfg.scales_per_octave < 1) {
    throw Error(ErrorCode::InvalidArgument, "scales_per_octave must be >= 1");
  }
  if (!(cfg.base_sigma > 0.0) || !(cfg.assumed_blur >= 0.0)) {
    throw Error(ErrorCode::InvalidSigma, "SIFT sigmas must be positive");
  }
  if (!(cfg.contrast_threshold >= 0.0) || !(cfg.edge_r > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "contrast threshold and edge ratio must be positive");
  }
  if (cfg.max_refine_iters < 1 || cfg.border < 1 ||
      cfg.orientation_bins < 3 || cfg.descriptor_width != 4 ||
      cfg.descriptor_bins != 8) {
    throw Error(ErrorCode::InvalidArgument, "unsupported SIFT layout");
  }
  if (!(cfg.orientation_peak_ratio > 0.0 && cfg.orientation_peak_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "orientation_peak_ratio must lie in (0, 1]");
  }
}

ScaleSpacePyramid build_pyramid(const GrayImage& img, const SiftConfig& cfg) {
  validate(cfg);
  if (std::min(img.width(), img.height()) < 16) {
    throw Error(ErrorCode::ImageTooSmall, "SIFT needs at least 16x16 pixels");
  }
  ScaleSpacePyramid p;
  p.base_sigma = cfg.base_sigma;
  p.scales_per_octave = cfg.scales_per_octave;
  p.input_scale = cfg.upsample ? 2.0 : 1.0;

  FloatImage base = to_float(img, 1.0 / 255.0);
  double present = cfg.assumed_blur;
  if (cfg.upsample) {
    base = upsample2x(base);
    present *= 2.0;
  }
  const double diff =
      std::sqrt(std::max(cfg.base_sigma * cfg.base_sigma - present * present,
                         0.01));
  base = gaussian_blur(base, diff);

  const int s = cfg.scales_per_octave;
  const int min_dim = std::min(base.width(), base.height());
  const int octaves =
      std::max(1, static_cast<int>(std::floor(std::log2(min_dim))) - 2);
  const double k = std::pow(2.0, 1.0 / s);

  // Incremental blur between consecutive layers of any octave.
  std::vector<double> local(s + 3);
  std::vector<double> step(s + 3, 0.0);
  for (int i = 0; i < s + 3; ++i) {
    local[i] = cfg.base_sigma * std::pow(k, i);
    if (i > 0) step[i] = std::sqrt(local[i] * local[i] - local[i - 1] * local[i - 1]);
  }

  for (int o = 0; o < octaves; ++o) {
    std::vector<FloatImage> levels;
    std::vector<double> sig;
    levels.reserve(s + 3);
    levels.push_back(o == 0 ? std::move(base) : halve2x(p.images[o - 1][s]));
    sig.push_back(local[0] * std::ldexp(1.0, o));
    for (int i = 1; i < s + 3; ++i) {
      levels.push_back(gaussian_blur(levels.back(), step[i]));
      sig.push_back(local[i] * std::ldexp(1.0, o));
    }
    p.images.push_back(std::move(levels));
    p.sigmas.push_back(std::move(sig));
  }
  return p;
}

DoGPyramid dog_pyramid(const ScaleSpacePyramid& p) {
  DoGPyramid d;
  for (const auto& octave : p.images) {
    std::vector<FloatImage> diffs;
    for (std::size_t i = 0; i + 1 < octave.size(); ++i) {
      FloatImage out(octave[i].width(), octave[i].height());
      auto a = octave[i].data();
      auto b = octave[i + 1].data();
      auto o = out.data();
      for (std::size_t j = 0; j < o.size(); ++j) o[j] = b[j] - a[j];
      diffs.push_back(std::move(out));
    }
    d.images.push_back(std::move(diffs));
  }
  return d;
}

std::vector<SiftKeypoint> detect_extrema(const DoGPyramid& d,
                                         const ScaleSpacePyramid& p,
                                         const SiftConfig& cfg) {
  validate(cfg);
  const int s = p.scales_per_octave;
  const double edge_bound = (cfg.edge_r + 1.0) * (cfg.edge_r + 1.0) / cfg.edge_r;
  std::vector<SiftKeypoint> out;

  for (int o = 0; o < static_cast<int>(d.images.size()); ++o) {
    const auto& dog = d.images[o];
    if (static_cast<int>(dog.size()) < s + 2) continue;
    const int w = dog[0].width();
    const int h = dog[0].height();
    const int b = cfg.border;
    if (w <= 2 * b || h <= 2 * b) continue;

    std::vector<std::vector<SiftKeypoint>> rows(h);
    parallel_for(h, [&](int y0) {
      if (y0 < b || y0 >= h - b) return;
      for (int layer0 = 1; layer0 <= s; ++layer0) {
        for (int x0 = b; x0 < w - b; ++x0) {
          if (!is_extremum(dog, layer0, x0, y0)) continue;

          int x = x0, y = y0, layer = layer0;
          double grad[3], hess[3][3], delta[3] = {0, 0, 0};
          bool converged = false;
          bool lost = false;
          for (int it = 0; it < cfg.max_refine_iters; ++it) {
            derivatives(dog, layer, x, y, grad, hess);
            const double rhs[3] = {-grad[0], -grad[1], -grad[2]};
            if (!solve3(hess, rhs, delta)) {
              lost = true;
              break;
            }
            if (std::abs(delta[0]) < 0.5 && std::abs(delta[1]) < 0.5 &&
                std::abs(delta[2]) < 0.5) {
              converged = true;
              break;
            }
            if (std::abs(delta[0]) > 1e6 || std::abs(delta[1]) > 1e6 ||
                std::abs(delta[2]) > 1e6) {
              lost = true;
              break;
            }
            x += static_cast<int>(std::lround(delta[0]));
            y += static_cast<int>(std::lround(delta[1]));
            layer += static_cast<int>(std::lround(delta[2]));
            if (layer < 1 || layer > s || x < b || x >= w - b || y < b ||
                y >= h - b) {
              lost = true;
              break;
            }
          }
          if (lost || !converged) continue;

          const double contrast = dog[layer](x, y) +
                                  0.5 * (grad[0] * delta[0] +
                                         grad[1] * delta[1] +
                                         grad[2] * delta[2]);
          if (std::abs(contrast) < cfg.contrast_threshold) continue;

          const double tr = hess[0][0] + hess[1][1];
          const double det = hess[0][0] * hess[1][1] - hess[0][1] * hess[0][1];
          if (det <= 0.0 || tr * tr / det >= edge_bound) continue;

          SiftKeypoint kp;
          kp.octave = o;
          kp.layer = layer;
          kp.octave_x = x + delta[0];
          kp.octave_y = y + delta[1];
          kp.octave_sigma =
              p.base_sigma * std::pow(2.0, (layer + delta[2]) / s);
          const double to_input = std::ldexp(1.0, o) / p.input_scale;
          // Octave pixel u covers input position (u + 0.5) * 2^o / scale - 0.5.
          kp.x = (kp.octave_x + 0.5) * to_input - 0.5;
          kp.y = (kp.octave_y + 0.5) * to_input - 0.5;
          kp.sigma = kp.octave_sigma * to_input;
          kp.response = std::abs(contrast);
          rows[y0].push_back(kp);
        }
      }
    });
    for (auto& r : rows) {
      for (auto& kp : r) out.push_back(kp);
    }
  }
  sort_keypoints(out);
  return out;
}

std::vector<double> orientation_peaks(std::span<const double> hist,
                                      double peak_ratio) {
  const int n = static_cast<int>(hist.size());
  std::vector<double> angles;
  if (n < 3) return angles;
  const double top = *std::max_element(hist.begin(), hist.end());
  if (!(top > 0.0)) return angles;
  for (int i = 0; i < n; ++i) {
    const double l = hist[(i + n - 1) % n];
    const double c = hist[i];
    const double r = hist[(i + 1) % n];
    if (c > l && c > r && c >= peak_ratio * top) {
      const double denom = l - 2.0 * c + r;
      const double offset = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
      angles.push_back(wrap_angle(kTwoPi * (i + offset) / n));
    }
  }
  return angles;
}

std::vector<SiftKeypoint> assign_orientations(const ScaleSpacePyramid& p,
                                              const SiftKeypoint& kp,
                                              const SiftConfig& cfg) {
  const FloatImage& img = p.images.at(kp.octave).at(kp.layer);
  const int n = cfg.orientation_bins;
  const double sigma = cfg.orientation_sigma_factor * kp.octave_sigma;
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const int cx = static_cast<int>(std::lround(kp.octave_x));
  const int cy = static_cast<int>(std::lround(kp.octave_y));
  const double denom = 2.0 * sigma * sigma;

  std::vector<double> raw(n, 0.0);
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y < 1 || y > img.height() - 2) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x < 1 || x > img.width() - 2) continue;
      const double gx = img(x + 1, y) - img(x - 1, y);
      const double gy = img(x, y + 1) - img(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      const double weight = std::exp(-(dx * dx + dy * dy) / denom);
      const double angle = wrap_angle(std::atan2(gy, gx));
      int bin = static_cast<int>(std::lround(angle * n / kTwoPi)) % n;
      raw[bin] += weight * mag;
    }
  }

  // Circular [1 4 6 4 1] / 16 smoothing.
  std::vector<double> hist(n);
  for (int i = 0; i < n; ++i) {
    hist[i] = (raw[(i + n - 2) % n] + raw[(i + 2) % n]) * (1.0 / 16.0) +
              (raw[(i + n - 1) % n] + raw[(i + 1) % n]) * (4.0 / 16.0) +
              raw[i] * (6.0 / 16.0);
  }

  const std::vector<double> angles =
      orientation_peaks(hist, cfg.orientation_peak_ratio);
  if (angles.empty()) {
    throw Error(ErrorCode::DegenerateNeighborhood,
                "no gradient energy around keypoint");
  }
  std::vector<SiftKeypoint> out;
  out.reserve(angles.size());
  for (double a : angles) {
    SiftKeypoint k = kp;
    k.orientation = a;
    out.push_back(k);
  }
  return out;
}

SiftDescriptor compute_descriptor(const ScaleSpacePyramid& p,
                                  const SiftKeypoint& kp,
                                  const SiftConfig& cfg) {
  constexpr int d = 4;
  constexpr int n = 8;
  const FloatImage& img = p.images.at(kp.octave).at(kp.layer);
  const double hist_width = cfg.descriptor_scale * kp.octave_sigma;
  const int radius = static_cast<int>(
      std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  const int cx = static_cast<int>(std::lround(kp.octave_x));
  const int cy = static_cast<int>(std::lround(kp.octave_y));
  if (cx - radius < 1 || cy - radius < 1 || cx + radius > img.width() - 2 ||
      cy + radius > img.height() - 2) {
    throw Error(ErrorCode::OutOfImage, "descriptor window leaves the image");
  }

  const double cos_t = std::cos(kp.orientation) / hist_width;
  const double sin_t = std::sin(kp.orientation) / hist_width;
  const double exp_denom = 2.0 * (0.5 * d) * (0.5 * d);
  // Padded (d+2) x (d+2) x (n+2) accumulator; the borders absorb the
  // trilinear spill-over and are discarded.
  std::vector<double> acc((d + 2) * (d + 2) * (n + 2), 0.0);
  auto cell = [&](int r, int c, int o) -> double& {
    return acc[(r * (d + 2) + c) * (n + 2) + o];
  };

  for (int i = -radius; i <= radius; ++i) {
    for (int j = -radius; j <= radius; ++j) {
      // Offset expressed in the keypoint frame, in units of spatial bins.
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + 0.5 * d - 0.5;
      const double cbin = c_rot + 0.5 * d - 0.5;
      if (!(rbin > -1.0 && rbin < d && cbin > -1.0 && cbin < d)) continue;
      const int x = cx + j;
      const int y = cy + i;
      const double gx = img(x + 1, y) - img(x - 1, y);
      const double gy = img(x, y + 1) - img(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      const double weight =
          std::exp(-(c_rot * c_rot + r_rot * r_rot) / exp_denom);
      const double obin =
          wrap_angle(std::atan2(gy, gx) - kp.orientation) * n / kTwoPi;

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double fr = rbin - r0;
      const double fc = cbin - c0;
      const double fo = obin - o0;
      o0 %= n;
      const double v = mag * weight;
      for (int dr = 0; dr <= 1; ++dr) {
        const double vr = v * (dr ? fr : 1.0 - fr);
        for (int dc = 0; dc <= 1; ++dc) {
          const double vc = vr * (dc ? fc : 1.0 - fc);
          cell(r0 + 1 + dr, c0 + 1 + dc, o0) += vc * (1.0 - fo);
          cell(r0 + 1 + dr, c0 + 1 + dc, o0 + 1) += vc * fo;
        }
      }
    }
  }

  SiftDescriptor desc;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      cell(r + 1, c + 1, 0) += cell(r + 1, c + 1, n);
      for (int o = 0; o < n; ++o) {
        desc.values[(r * d + c) * n + o] = cell(r + 1, c + 1, o);
      }
    }
  }

  auto normalize = [&desc] {
    double sum = 0.0;
    for (double v : desc.values) sum += v * v;
    const double norm = std::sqrt(sum);
    if (!(norm > 0.0)) {
      throw Error(ErrorCode::DegenerateNeighborhood,
                  "descriptor window has no gradient energy");
    }
    for (double& v : desc.values) v /= norm;
  };
  normalize();
  for (double& v : desc.values) v = std::min(v, cfg.descriptor_clamp);
  normalize();
  return desc;
}

std::vector<std::pair<std::size_t, std::size_t>> match_descriptors(
    std::span<const SiftDescriptor> a, std::span<const SiftDescriptor> b,
    double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "ratio must lie in (0, 1)");
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (b.empty()) return out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < 128; ++k) {
        const double diff = a[i].values[k] - b[j].values[k];
        sum += diff * diff;
      }
      const double dist = std::sqrt(sum);
      if (dist < best) {
        second = best;
        best = dist;
        best_j = j;
      } else if (dist < second) {
        second = dist;
      }
    }
    if (b.size() == 1) second = 1.0;
    if (best < ratio * second) out.emplace_back(i, best_j);
  }
  return out;
}

void sort_keypoints(std::vector<SiftKeypoint>& kps) {
  std::stable_sort(kps.begin(), kps.end(),
                   [](const SiftKeypoint& a, const SiftKeypoint& b) {
                     return std::tie(a.octave, a.layer, a.y, a.x,
                                     a.orientation) <
                            std::tie(b.octave, b.layer, b.y, b.x,
                                     b.orientation);
                   });
}

std::vector<SiftKeypoint> detect_keypoints(const GrayImage& img,
                                           const SiftConfig& cfg) {
  const ScaleSpacePyramid p = build_pyramid(img, cfg);
  const DoGPyramid d = dog_pyramid(p);
  std::vector<SiftKeypoint> out;
  for (const SiftKeypoint& kp : detect_extrema(d, p, cfg)) {
    try {
      for (SiftKeypoint& k : assign_orientations(p, kp, cfg)) {
        out.push_back(k);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateNeighborhood) throw;
    }
  }
  sort_keypoints(out);
  return out;
}

SiftFeatures detect_and_describe(const GrayImage& img, const SiftConfig& cfg) {
  const ScaleSpacePyramid p = build_pyramid(img, cfg);
  const DoGPyramid d = dog_pyramid(p);
  std::vector<SiftKeypoint> oriented;
  for (const SiftKeypoint& kp : detect_extrema(d, p, cfg)) {
    try {
      for (SiftKeypoint& k : assign_orientations(p, kp, cfg)) {
        oriented.push_back(k);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateNeighborhood) throw;
    }
  }
  sort_keypoints(oriented);

  SiftFeatures f;
  for (const SiftKeypoint& kp : oriented) {
    try {
      f.descriptors.push_back(compute_descriptor(p, kp, cfg));
      f.keypoints.push_back(kp);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfImage &&
          e.code() != ErrorCode::DegenerateNeighborhood) {
        throw;
      }
    }
  }
  return f;
}

}  // namespace hygienefeat
