#include "gigareg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gigareg/error.hpp"
#include "gigareg/nonrigid.hpp"

namespace gigareg {
namespace {

// mt19937_64 output is fixed by the standard; the conversions below are
// written out so cases are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

constexpr std::uint64_t kTextureStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDeformStream = 0xbf58476d1ce4e5b9ULL;
constexpr std::uint64_t kAffineStream = 0x94d049bb133111ebULL;

ImagePlane noise_plane(Rng& rng, int size, double sigma) {
  ImagePlane p(size, size);
  for (double& v : p.values()) v = rng.normal();
  p = gaussian_blur(p, sigma);
  double ss = 0.0;
  for (double v : p.values()) ss += v * v;
  const double sd = std::sqrt(ss / static_cast<double>(p.size()));
  if (sd > 0.0)
    for (double& v : p.values()) v /= sd;
  return p;
}

}  // namespace

ImagePlane synth_texture(std::uint64_t seed, int size) {
  if (size < 1) throw Error(ErrorKind::InvalidArgument, "texture size must be positive");
  Rng rng(seed ^ kTextureStream);
  ImagePlane acc(size, size, 0.0);

  // Oriented anisotropic Gaussians give tissue-like structure at scales
  // proportional to the image.
  const int n_gauss = 80;
  for (int k = 0; k < n_gauss; ++k) {
    const double cx = rng.uniform(0.0, size);
    const double cy = rng.uniform(0.0, size);
    const double s_major = rng.uniform(size / 40.0, size / 12.0);
    const double s_minor = s_major * rng.uniform(0.2, 0.6);
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.3, 1.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double reach = 3.0 * s_major;
    const int x0 = std::max(0, static_cast<int>(cx - reach));
    const int x1 = std::min(size - 1, static_cast<int>(cx + reach));
    const int y0 = std::max(0, static_cast<int>(cy - reach));
    const int y1 = std::min(size - 1, static_cast<int>(cy + reach));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = ca * dx + sa * dy;
        const double v = -sa * dx + ca * dy;
        acc.at(x, y) += amp * std::exp(-0.5 * (u * u / (s_major * s_major) + v * v / (s_minor * s_minor)));
      }
  }

  // Mid-scale noise relative to the image and fine noise in absolute pixels.
  const ImagePlane mid = noise_plane(rng, size, std::max(1.0, size / 128.0));
  const ImagePlane fine = noise_plane(rng, size, 1.5);
  auto dst = acc.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = dst[i] + 0.35 * mid.values()[i] + 0.2 * fine.values()[i];

  double sum = 0.0, ss = 0.0;
  for (double v : dst) sum += v;
  const double mu = sum / static_cast<double>(dst.size());
  for (double v : dst) ss += (v - mu) * (v - mu);
  const double sd = std::max(1e-12, std::sqrt(ss / static_cast<double>(dst.size())));
  for (double& v : dst) v = 0.5 + 0.5 * std::tanh((v - mu) / (1.5 * sd));
  return acc;
}

DisplacementField synth_deformation(std::uint64_t seed, int size, double max_px, int n_blobs,
                                    double sigma_min, double sigma_max) {
  DisplacementField d(size, size);
  if (max_px <= 0.0 || n_blobs <= 0) return d;
  Rng rng(seed ^ kDeformStream);
  for (int k = 0; k < n_blobs; ++k) {
    const double cx = rng.uniform(size / 8.0, 7.0 * size / 8.0);
    const double cy = rng.uniform(size / 8.0, 7.0 * size / 8.0);
    const double sigma = rng.uniform(sigma_min, sigma_max);
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.5, 1.0);
    const double vx = amp * std::cos(dir), vy = amp * std::sin(dir);
    const double reach = 6.0 * sigma;
    const int x0 = std::max(0, static_cast<int>(cx - reach));
    const int x1 = std::min(size - 1, static_cast<int>(cx + reach));
    const int y0 = std::max(0, static_cast<int>(cy - reach));
    const int y1 = std::min(size - 1, static_cast<int>(cy + reach));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double g = std::exp(-r2 / (2.0 * sigma * sigma));
        d.ux[d.index(x, y)] += vx * g;
        d.uy[d.index(x, y)] += vy * g;
      }
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) peak = std::max(peak, std::hypot(d.ux[i], d.uy[i]));
  if (peak > 0.0) {
    const double s = max_px / peak;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.ux[i] *= s;
      d.uy[i] *= s;
    }
  }
  return d;
}

SyntheticCase generate_case(std::uint64_t seed, const SynthParams& params) {
  if (params.size < 256) throw Error(ErrorKind::InvalidArgument, "synthetic size must be at least 256");
  if (params.max_deform_px < 0.0) throw Error(ErrorKind::InvalidArgument, "max_deform_px must be >= 0");
  const int size = params.size;
  SyntheticCase c;
  c.seed = seed;
  c.source = synth_texture(seed, size);
  c.true_field = synth_deformation(seed, size, params.max_deform_px, params.n_blobs,
                                   params.blob_sigma_min_frac * size, params.blob_sigma_max_frac * size);

  Rng rng(seed ^ kAffineStream);
  const double tx = rng.uniform(-1.0, 1.0) * params.translation_frac * size;
  const double ty = rng.uniform(-1.0, 1.0) * params.translation_frac * size;
  const double gj = rng.uniform(-1.0, 1.0) * params.gamma_jitter;
  c.true_affine = compose(rotation_about_center(params.rot_deg, size, size),
                          AffineTransform::translation(tx, ty));
  c.gamma = 1.0 + gj;

  c.target = ImagePlane(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const std::size_t i = c.true_field.index(x, y);
      const Point2 q = c.true_affine.apply({x + c.true_field.ux[i], y + c.true_field.uy[i]});
      double v = bicubic_sample(c.source, q.x, q.y);
      if (c.gamma != 1.0) v = std::pow(std::clamp(v, 0.0, 1.0), c.gamma);
      c.target.at(x, y) = v;
    }

  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i) {
      const int x = static_cast<int>(std::lround((i + 1) * size / 11.0));
      const int y = static_cast<int>(std::lround((j + 1) * size / 11.0));
      const std::size_t k = c.true_field.index(x, y);
      const std::string id = std::to_string(j * 10 + i);
      c.landmarks_target.ids.push_back(id);
      c.landmarks_target.points.push_back({static_cast<double>(x), static_cast<double>(y)});
      c.landmarks_source.ids.push_back(id);
      c.landmarks_source.points.push_back(
          c.true_affine.apply({x + c.true_field.ux[k], y + c.true_field.uy[k]}));
    }
  return c;
}

SyntheticCase generate_case(std::uint64_t seed, int size, double rot_deg, double max_deform_px,
                            int n_blobs) {
  SynthParams p;
  p.size = size;
  p.rot_deg = rot_deg;
  p.max_deform_px = max_deform_px;
  p.n_blobs = n_blobs;
  return generate_case(seed, p);
}

}  // namespace gigareg
