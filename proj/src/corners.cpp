#include "hygienefeat/corners.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hygienefeat/imgcore.hpp"

namespace hygienefeat {

void validate(const CornerConfig& cfg) {
  if (!(cfg.harris_k > 0.0 && cfg.harris_k < 0.25)) {
    throw Error(ErrorCode::InvalidK, "harris_k must lie in (0, 0.25)");
  }
  if (!(cfg.window_sigma > 0.0) || !std::isfinite(cfg.window_sigma)) {
    throw Error(ErrorCode::InvalidSigma, "window_sigma must be > 0");
  }
  if (!(cfg.quality_level > 0.0 && cfg.quality_level <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "quality_level must lie in (0, 1]");
  }
  if (cfg.max_corners < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_corners must be >= 1");
  }
  if (!(cfg.min_distance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_distance must be >= 0");
  }
  if (cfg.absolute_threshold && !(*cfg.absolute_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "absolute_threshold must be > 0");
  }
}

StructureTensorField structure_tensor(const GrayImage& img,
                                      double window_sigma) {
  if (img.width() < 3 || img.height() < 3) {
    throw Error(ErrorCode::ImageTooSmall,
                "structure tensor needs at least 3x3 pixels");
  }
  const GradientField g = sobel_gradients(to_float(img, 1.0 / 255.0));
  const int w = img.width();
  const int h = img.height();
  FloatImage xx(w, h), xy(w, h), yy(w, h);
  auto gx = g.gx.data();
  auto gy = g.gy.data();
  auto pxx = xx.data();
  auto pxy = xy.data();
  auto pyy = yy.data();
  for (std::size_t i = 0; i < gx.size(); ++i) {
    pxx[i] = gx[i] * gx[i];
    pxy[i] = gx[i] * gy[i];
    pyy[i] = gy[i] * gy[i];
  }
  return {gaussian_blur(xx, window_sigma), gaussian_blur(xy, window_sigma),
          gaussian_blur(yy, window_sigma), window_sigma};
}

FloatImage harris_response(const StructureTensorField& field, double k) {
  if (!(k > 0.0 && k < 0.25)) {
    throw Error(ErrorCode::InvalidK, "harris k must lie in (0, 0.25)");
  }
  FloatImage r(field.ixx.width(), field.ixx.height());
  auto a = field.ixx.data();
  auto b = field.ixy.data();
  auto c = field.iyy.data();
  auto out = r.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double trace = a[i] + c[i];
    out[i] = (a[i] * c[i] - b[i] * b[i]) - k * trace * trace;
  }
  return r;
}

FloatImage shi_tomasi_response(const StructureTensorField& field) {
  FloatImage r(field.ixx.width(), field.ixx.height());
  auto a = field.ixx.data();
  auto b = field.ixy.data();
  auto c = field.iyy.data();
  auto out = r.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double half_diff = 0.5 * (a[i] - c[i]);
    const double lmin =
        0.5 * (a[i] + c[i]) - std::sqrt(half_diff * half_diff + b[i] * b[i]);
    out[i] = lmin > 0.0 ? lmin : 0.0;
  }
  return r;
}

double corner_threshold(const FloatImage& response, const CornerConfig& cfg) {
  if (cfg.absolute_threshold) return *cfg.absolute_threshold;
  auto v = response.data();
  const double peak = *std::max_element(v.begin(), v.end());
  return cfg.quality_level * peak;
}

std::vector<CornerPoint> detect_corners(const FloatImage& response,
                                        const CornerConfig& cfg) {
  validate(cfg);
  const int w = response.width();
  const int h = response.height();
  auto v = response.data();
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::InvalidArgument, "response map is not finite");
    }
  }
  const double peak = *std::max_element(v.begin(), v.end());
  if (!cfg.absolute_threshold && peak <= 0.0) return {};
  const double thresh = corner_threshold(response, cfg);

  struct Candidate {
    double response;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = response(x, y);
      if (r < thresh || r <= 0.0) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || !response.contains(x + dx, y + dy)) {
            continue;
          }
          const double n = response(x + dx, y + dy);
          const std::size_t nidx =
              static_cast<std::size_t>(y + dy) * w + (x + dx);
          // Equal neighbours defer to the smaller row-major index.
          if (n > r || (n == r && nidx < idx)) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({r, idx});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.response != b.response) return a.response > b.response;
              return a.index < b.index;
            });

  std::vector<CornerPoint> accepted;
  const double min_d2 = cfg.min_distance * cfg.min_distance;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(accepted.size()) >= cfg.max_corners) break;
    const int x = static_cast<int>(c.index % w);
    const int y = static_cast<int>(c.index / w);
    const bool far_enough =
        std::all_of(accepted.begin(), accepted.end(), [&](const CornerPoint& a) {
          const double dx = a.x - x;
          const double dy = a.y - y;
          return dx * dx + dy * dy >= min_d2;
        });
    if (far_enough) accepted.push_back({x, y, c.response});
  }
  return accepted;
}

RasterImage mark_corners(const RasterImage& img,
                         std::span<const CornerPoint> corners) {
  RasterImage out = to_rgb(img);
  if (corners.empty()) return out;
  BinaryMask marks(img.width, img.height);
  for (const CornerPoint& c : corners) {
    if (!marks.contains(c.x, c.y)) {
      throw Error(ErrorCode::OutOfBounds,
                  "corner (" + std::to_string(c.x) + ", " +
                      std::to_string(c.y) + ") outside the image");
    }
    marks(c.x, c.y) = 1;
  }
  marks = dilate(marks, 2);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!marks(x, y)) continue;
      out.at(x, y, 0) = 255;
      out.at(x, y, 1) = 0;
      out.at(x, y, 2) = 0;
    }
  }
  return out;
}

FloatImage corner_response(const GrayImage& img, CornerMethod method,
                           const CornerConfig& cfg) {
  validate(cfg);
  const StructureTensorField field = structure_tensor(img, cfg.window_sigma);
  return method == CornerMethod::Harris ? harris_response(field, cfg.harris_k)
                                        : shi_tomasi_response(field);
}

}  // namespace hygienefeat
