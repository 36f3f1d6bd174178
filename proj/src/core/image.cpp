#include "gigareg/image.hpp"

#include <algorithm>
#include <cmath>

#include "gigareg/error.hpp"
#include "gigareg/simd.hpp"

namespace gigareg {

ImagePlane::ImagePlane(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width < 1 || height < 1)
    throw Error(ErrorKind::InvalidArgument, "image plane dimensions must be positive");
}

ImagePlane::ImagePlane(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 1 || height < 1)
    throw Error(ErrorKind::InvalidArgument, "image plane dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorKind::ShapeMismatch, "plane data length does not match dimensions");
}

Size2 fit_max_side(int width, int height, int max_side) {
  const int longest = std::max(width, height);
  const double s = static_cast<double>(max_side) / longest;
  return {std::max(1, static_cast<int>(std::lround(width * s))),
          std::max(1, static_cast<int>(std::lround(height * s)))};
}

ImagePlane to_grayscale(const RgbImage& img) {
  ImagePlane out(img.width, img.height);
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::uint8_t* px = img.data.data() + 3 * i;
    const double l = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
    dst[i] = std::clamp(l, 0.0, 1.0);
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += taps[k + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ImagePlane gaussian_blur(const ImagePlane& p, double sigma) { return gaussian_blur(p, sigma, sigma); }

ImagePlane gaussian_blur(const ImagePlane& p, double sigma_x, double sigma_y) {
  if (sigma_x < 0.0 || sigma_y < 0.0)
    throw Error(ErrorKind::InvalidArgument, "gaussian sigma must be non-negative");
  const auto& k = simd::kernels();
  ImagePlane cur = p;
  if (sigma_x > 0.0) {
    const auto taps = gaussian_taps(sigma_x);
    ImagePlane tmp(p.width(), p.height());
    k.convolve_rows(cur.values().data(), tmp.values().data(), p.width(), p.height(), taps.data(),
                    static_cast<int>(taps.size() / 2));
    cur = std::move(tmp);
  }
  if (sigma_y > 0.0) {
    const auto taps = gaussian_taps(sigma_y);
    ImagePlane tmp(p.width(), p.height());
    k.convolve_cols(cur.values().data(), tmp.values().data(), p.width(), p.height(), taps.data(),
                    static_cast<int>(taps.size() / 2));
    cur = std::move(tmp);
  }
  return cur;
}

void cubic_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = -0.5 * t3 + t2 - 0.5 * t;
  w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
  w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
  w[3] = 0.5 * t3 - 0.5 * t2;
}

void cubic_weight_derivatives(double t, double dw[4]) {
  const double t2 = t * t;
  dw[0] = -1.5 * t2 + 2.0 * t - 0.5;
  dw[1] = 4.5 * t2 - 5.0 * t;
  dw[2] = -4.5 * t2 + 4.0 * t + 0.5;
  dw[3] = 1.5 * t2 - t;
}

namespace {

bool outside(const ImagePlane& p, double x, double y) {
  return !(x >= 0.0 && y >= 0.0 && x <= p.width() - 1 && y <= p.height() - 1);
}

struct Taps {
  int idx[4];
  double t;
};

Taps cubic_taps(double c, int n) {
  const double f = std::floor(c);
  Taps taps;
  taps.t = c - f;
  const int base = static_cast<int>(f);
  for (int i = 0; i < 4; ++i) taps.idx[i] = std::clamp(base - 1 + i, 0, n - 1);
  return taps;
}

}  // namespace

double bicubic_sample(const ImagePlane& p, double x, double y, double border) {
  if (outside(p, x, y)) return border;
  const Taps tx = cubic_taps(x, p.width());
  const Taps ty = cubic_taps(y, p.height());
  double wx[4], wy[4];
  cubic_weights(tx.t, wx);
  cubic_weights(ty.t, wy);
  double value = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double* row = p.row(ty.idx[j]);
    double r = 0.0;
    for (int i = 0; i < 4; ++i) r = r + wx[i] * row[tx.idx[i]];
    value = value + wy[j] * r;
  }
  return value;
}

SampleWithGradient bicubic_sample_grad(const ImagePlane& p, double x, double y, double border) {
  if (outside(p, x, y)) return {border, 0.0, 0.0};
  const Taps tx = cubic_taps(x, p.width());
  const Taps ty = cubic_taps(y, p.height());
  double wx[4], wy[4], dwx[4], dwy[4];
  cubic_weights(tx.t, wx);
  cubic_weights(ty.t, wy);
  cubic_weight_derivatives(tx.t, dwx);
  cubic_weight_derivatives(ty.t, dwy);
  SampleWithGradient s;
  for (int j = 0; j < 4; ++j) {
    const double* row = p.row(ty.idx[j]);
    double r = 0.0;
    double rd = 0.0;
    for (int i = 0; i < 4; ++i) {
      r = r + wx[i] * row[tx.idx[i]];
      rd = rd + dwx[i] * row[tx.idx[i]];
    }
    s.value = s.value + wy[j] * r;
    s.dx = s.dx + wy[j] * rd;
    s.dy = s.dy + dwy[j] * r;
  }
  return s;
}

double bilinear_sample(const ImagePlane& p, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(p.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(p.height() - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, p.width() - 1);
  const int y1 = std::min(y0 + 1, p.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = p.at(x0, y0) * (1.0 - fx) + p.at(x1, y0) * fx;
  const double bottom = p.at(x0, y1) * (1.0 - fx) + p.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

ImagePlane resample(const ImagePlane& p, int new_w, int new_h, Interpolation mode) {
  if (new_w < 1 || new_h < 1) throw Error(ErrorKind::InvalidArgument, "resample size must be positive");
  if (new_w == p.width() && new_h == p.height()) return p;
  ImagePlane out(new_w, new_h);
  const double sx = static_cast<double>(p.width()) / new_w;
  const double sy = static_cast<double>(p.height()) / new_h;
  const double max_x = p.width() - 1;
  const double max_y = p.height() - 1;
  for (int j = 0; j < new_h; ++j) {
    const double y = (j + 0.5) * sy - 0.5;
    double* dst = out.row(j);
    for (int i = 0; i < new_w; ++i) {
      const double x = (i + 0.5) * sx - 0.5;
      if (mode == Interpolation::Bilinear)
        dst[i] = bilinear_sample(p, x, y);
      else
        dst[i] = bicubic_sample(p, std::clamp(x, 0.0, max_x), std::clamp(y, 0.0, max_y));
    }
  }
  return out;
}

ImagePlane resample_antialiased(const ImagePlane& p, int new_w, int new_h, Interpolation mode) {
  const double fx = static_cast<double>(p.width()) / new_w;
  const double fy = static_cast<double>(p.height()) / new_h;
  const double sx = fx > 1.0 ? fx / 2.0 : 0.0;
  const double sy = fy > 1.0 ? fy / 2.0 : 0.0;
  if (sx == 0.0 && sy == 0.0) return resample(p, new_w, new_h, mode);
  return resample(gaussian_blur(p, sx, sy), new_w, new_h, mode);
}

}  // namespace gigareg
