#include "hygienefeat/imgcore.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <thread>

namespace hygienefeat {

namespace {

std::atomic<int> g_threads{1};
thread_local bool t_in_worker = false;

bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void expect_space(bool allow_run) {
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorCode::MalformedHeader, "PNM header ends early");
    }
    check_comment();
    if (!is_pnm_space(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedHeader, "expected whitespace in header");
    }
    ++pos_;
    while (allow_run && pos_ < bytes_.size() && is_pnm_space(bytes_[pos_])) {
      ++pos_;
    }
    check_comment();
  }

  long number() {
    check_comment();
    std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) {
        throw Error(ErrorCode::MalformedHeader, "header value too large");
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw Error(ErrorCode::MalformedHeader, "expected a decimal number");
    }
    return v;
  }

 private:
  void check_comment() const {
    if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
      throw Error(ErrorCode::MalformedHeader, "comments are not accepted");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

// Mirror border for one axis applied to every tap.
// With a normalized kernel the sum is taken over differences from the centre
// sample, so constant regions come out bit-exact.
void correlate_rows(const FloatImage& src, FloatImage& dst, const Kernel1D& k,
                    bool normalized) {
  const int w = src.width();
  parallel_for(src.height(), [&](int y) {
    auto in = src.row(y);
    auto out = dst.row(y);
    for (int x = 0; x < w; ++x) {
      const double centre = normalized ? in[x] : 0.0;
      double acc = 0.0;
      for (int i = -k.radius; i <= k.radius; ++i) {
        acc += k.taps[i + k.radius] * (in[reflect_index(x + i, w)] - centre);
      }
      out[x] = centre + acc;
    }
  });
}

void correlate_cols(const FloatImage& src, FloatImage& dst, const Kernel1D& k,
                    bool normalized) {
  const int w = src.width();
  const int h = src.height();
  parallel_for(h, [&](int y) {
    auto out = dst.row(y);
    auto mid = src.row(y);
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = -k.radius; i <= k.radius; ++i) {
      const double t = k.taps[i + k.radius];
      auto in = src.row(reflect_index(y + i, h));
      if (normalized) {
        for (int x = 0; x < w; ++x) out[x] += t * (in[x] - mid[x]);
      } else {
        for (int x = 0; x < w; ++x) out[x] += t * in[x];
      }
    }
    if (normalized) {
      for (int x = 0; x < w; ++x) out[x] += mid[x];
    }
  });
}

}  // namespace

RasterImage decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::UnsupportedFormat, "not a binary PNM file");
  }
  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw Error(ErrorCode::UnsupportedFormat,
                std::string("unsupported PNM magic P") +
                    static_cast<char>(bytes[1]));
  }

  HeaderReader header(bytes);
  header.expect_space(false);
  const long width = header.number();
  header.expect_space(true);
  const long height = header.number();
  header.expect_space(true);
  const long maxval = header.number();
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::MalformedHeader, "image dimensions must be >= 1");
  }
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedFormat, "only maxval 255 is supported");
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (header.pos() >= bytes.size() || !is_pnm_space(bytes[header.pos()])) {
    throw Error(ErrorCode::MalformedHeader, "missing raster separator");
  }
  const std::size_t body = header.pos() + 1;
  const std::size_t expected =
      static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - body < expected) {
    throw Error(ErrorCode::TruncatedData,
                "PNM body holds " + std::to_string(bytes.size() - body) +
                    " bytes, header promises " + std::to_string(expected));
  }
  std::vector<std::uint8_t> pixels(bytes.begin() + body,
                                   bytes.begin() + body + expected);
  return RasterImage(static_cast<int>(width), static_cast<int>(height),
                     channels, std::move(pixels));
}

RasterImage load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_pnm(bytes);
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw Error(ErrorCode::InvalidArgument, "PNM supports 1 or 3 channels");
  }
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") +
                             "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void save_pnm(const RasterImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_pnm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::IoFailure, "short write to " + path.string());
  }
}

GrayImage to_grayscale(const RasterImage& img) {
  if (img.channels == 1) return as_gray(img);
  GrayImage out(img.width, img.height);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const int r = img.pixels[3 * i];
    const int g = img.pixels[3 * i + 1];
    const int b = img.pixels[3 * i + 2];
    // Integer form of 0.299 R + 0.587 G + 0.114 B; the sum is never
    // negative, so adding half rounds away from zero.
    const int y = (299 * r + 587 * g + 114 * b + 500) / 1000;
    dst[i] = static_cast<std::uint8_t>(std::min(y, 255));
  }
  return out;
}

Kernel1D gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidSigma, "sigma must be finite and > 0");
  }
  Kernel1D k;
  k.radius = static_cast<int>(std::ceil(3.0 * sigma));
  k.taps.resize(2 * k.radius + 1);
  double sum = 0.0;
  for (int d = -k.radius; d <= k.radius; ++d) {
    const double v = std::exp(-(d * d) / (2.0 * sigma * sigma));
    k.taps[d + k.radius] = v;
    sum += v;
  }
  for (double& t : k.taps) t /= sum;
  // Force exact symmetry after normalization.
  for (int d = 1; d <= k.radius; ++d) {
    k.taps[k.radius - d] = k.taps[k.radius + d];
  }
  return k;
}

FloatImage separable_filter(const FloatImage& img, const Kernel1D& horizontal,
                            const Kernel1D& vertical) {
  FloatImage tmp(img.width(), img.height());
  FloatImage out(img.width(), img.height());
  correlate_rows(img, tmp, horizontal, false);
  correlate_cols(tmp, out, vertical, false);
  return out;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma) {
  const Kernel1D k = gaussian_kernel(sigma);
  FloatImage tmp(img.width(), img.height());
  FloatImage out(img.width(), img.height());
  correlate_rows(img, tmp, k, true);
  correlate_cols(tmp, out, k, true);
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const FloatImage blurred = gaussian_blur(to_float(img), sigma);
  GrayImage out(img.width(), img.height());
  auto src = blurred.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = to_byte(src[i]);
  return out;
}

BinaryMask threshold_binary(const GrayImage& img, int t) {
  BinaryMask out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] > t ? 1 : 0;
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int iterations) {
  if (iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "dilate needs iterations >= 1");
  }
  BinaryMask cur = mask;
  const int w = mask.width();
  const int h = mask.height();
  for (int it = 0; it < iterations; ++it) {
    BinaryMask next(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::uint8_t v = 0;
        for (int dy = -1; dy <= 1 && !v; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (cur.contains(x + dx, y + dy) && cur(x + dx, y + dy)) {
              v = 1;
              break;
            }
          }
        }
        next(x, y) = v;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

GradientField sobel_gradients(const FloatImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw Error(ErrorCode::ImageTooSmall, "Sobel needs at least 3x3 pixels");
  }
  GradientField g{FloatImage(w, h), FloatImage(w, h)};
  parallel_for(h, [&](int y) {
    const auto up = img.row(reflect_index(y - 1, h));
    const auto mid = img.row(y);
    const auto down = img.row(reflect_index(y + 1, h));
    auto gx = g.gx.row(y);
    auto gy = g.gy.row(y);
    for (int x = 0; x < w; ++x) {
      const int l = reflect_index(x - 1, w);
      const int r = reflect_index(x + 1, w);
      gx[x] = (up[r] - up[l]) + 2.0 * (mid[r] - mid[l]) + (down[r] - down[l]);
      gy[x] = (down[l] - up[l]) + 2.0 * (down[x] - up[x]) + (down[r] - up[r]);
    }
  });
  return g;
}

GradientField sobel_gradients(const GrayImage& img) {
  return sobel_gradients(to_float(img));
}

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

double sample_bilinear(const FloatImage& img, double x, double y) noexcept {
  const int w = img.width();
  const int h = img.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img(x0, y0) * (1.0 - fx) + img(x1, y0) * fx;
  const double bottom = img(x0, y1) * (1.0 - fx) + img(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

std::uint8_t to_byte(double v) noexcept {
  const double r = std::round(v);  // half away from zero
  if (!(r > 0.0)) return 0;
  if (r > 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }

int thread_count() noexcept { return g_threads.load(); }

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = t_in_worker ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  // Chunks are contiguous and ordered, so the first recorded failure is the
  // one a sequential loop would have reported. Nested calls run inline.
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
      const int begin =
          static_cast<int>(static_cast<long long>(n) * t / workers);
      const int end =
          static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
      pool.emplace_back([&, t, begin, end] {
        t_in_worker = true;
        for (int i = begin; i < end; ++i) {
          try {
            body(i);
          } catch (...) {
            errors[t] = std::current_exception();
            return;
          }
        }
      });
    }
  }
  for (int t = 0; t < workers; ++t) {
    if (errors[t]) std::rethrow_exception(errors[t]);
  }
}

}  // namespace hygienefeat
