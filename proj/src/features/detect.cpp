#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <utility>

#include "gigareg/features.hpp"

namespace gigareg {
namespace {

constexpr int kBorder = 5;
constexpr int kMinSide = 32;
constexpr int kMinOctaveSide = 16;
constexpr int kRefineSteps = 5;
constexpr int kPatch = 16;
constexpr int kCells = 4;
constexpr int kBins = 8;

struct Octave {
  std::vector<ImagePlane> gauss;
  std::vector<ImagePlane> dog;
};

ImagePlane decimate(const ImagePlane& p) {
  ImagePlane out(p.width() / 2, p.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    const double* in = p.row(2 * y);
    double* o = out.row(y);
    for (int x = 0; x < out.width(); ++x) o[x] = in[2 * x];
  }
  return out;
}

ImagePlane subtract(const ImagePlane& a, const ImagePlane& b) {
  ImagePlane out(a.width(), a.height());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  return out;
}

std::vector<Octave> build_scale_space(const ImagePlane& p, const DetectorParams& prm) {
  const int s = prm.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / s);
  // The input is assumed to carry a blur of 0.5 px.
  ImagePlane base = gaussian_blur(p, std::sqrt(std::max(0.01, prm.sigma0 * prm.sigma0 - 0.25)));
  std::vector<Octave> octaves;
  for (int o = 0; o < prm.octaves; ++o) {
    if (base.width() < kMinOctaveSide || base.height() < kMinOctaveSide) break;
    Octave oc;
    oc.gauss.push_back(std::move(base));
    double sig_prev = prm.sigma0;
    for (int i = 1; i < s + 3; ++i) {
      const double sig = sig_prev * k;
      oc.gauss.push_back(gaussian_blur(oc.gauss.back(), std::sqrt(sig * sig - sig_prev * sig_prev)));
      sig_prev = sig;
    }
    for (int i = 0; i + 1 < static_cast<int>(oc.gauss.size()); ++i)
      oc.dog.push_back(subtract(oc.gauss[i + 1], oc.gauss[i]));
    base = decimate(oc.gauss[s]);
    octaves.push_back(std::move(oc));
  }
  return octaves;
}

bool is_extremum(const std::vector<ImagePlane>& dog, int l, int x, int y) {
  const double v = dog[l].at(x, y);
  const bool is_max = v > 0.0;
  for (int dl = -1; dl <= 1; ++dl) {
    const ImagePlane& d = dog[l + dl];
    for (int dy = -1; dy <= 1; ++dy) {
      const double* r = d.row(y + dy);
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dy == 0 && dx == 0) continue;
        const double n = r[x + dx];
        if (is_max ? n > v : n < v) return false;
      }
    }
  }
  return true;
}

// Solves H x = b for a symmetric 3x3 system; false when singular.
bool solve3(const double h[3][3], const double b[3], double x[3]) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i][j] = h[i][j];
    m[i][3] = b[i];
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (std::abs(m[piv][c]) < 1e-14) return false;
    if (piv != c)
      for (int j = 0; j < 4; ++j) std::swap(m[c][j], m[piv][j]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = m[r][c] / m[c][c];
      for (int j = c; j < 4; ++j) m[r][j] -= f * m[c][j];
    }
  }
  for (int i = 2; i >= 0; --i) {
    double acc = m[i][3];
    for (int j = i + 1; j < 3; ++j) acc -= m[i][j] * x[j];
    x[i] = acc / m[i][i];
  }
  return true;
}

struct Candidate {
  Keypoint kp;
  int octave = 0;
  int level = 0;
  double ox = 0.0;  // position in octave pixels
  double oy = 0.0;
};

bool refine(const std::vector<ImagePlane>& dog, int s, const DetectorParams& prm, int& l, int& x,
            int& y, double off[3], double& contrast) {
  const int w = dog[0].width();
  const int h = dog[0].height();
  for (int step = 0; step < kRefineSteps; ++step) {
    const ImagePlane& d0 = dog[l - 1];
    const ImagePlane& d1 = dog[l];
    const ImagePlane& d2 = dog[l + 1];
    const double v = d1.at(x, y);
    const double g[3] = {0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y)),
                         0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1)), 0.5 * (d2.at(x, y) - d0.at(x, y))};
    const double dxx = d1.at(x + 1, y) + d1.at(x - 1, y) - 2.0 * v;
    const double dyy = d1.at(x, y + 1) + d1.at(x, y - 1) - 2.0 * v;
    const double dss = d2.at(x, y) + d0.at(x, y) - 2.0 * v;
    const double dxy = 0.25 * (d1.at(x + 1, y + 1) - d1.at(x - 1, y + 1) - d1.at(x + 1, y - 1) +
                               d1.at(x - 1, y - 1));
    const double dxs = 0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) - d0.at(x + 1, y) + d0.at(x - 1, y));
    const double dys = 0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) - d0.at(x, y + 1) + d0.at(x, y - 1));
    const double hm[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
    const double rhs[3] = {-g[0], -g[1], -g[2]};
    if (!solve3(hm, rhs, off)) return false;
    if (std::abs(off[0]) < 0.5 && std::abs(off[1]) < 0.5 && std::abs(off[2]) < 0.5) {
      contrast = v + 0.5 * (g[0] * off[0] + g[1] * off[1] + g[2] * off[2]);
      if (std::abs(contrast) < prm.contrast_threshold) return false;
      const double tr = dxx + dyy;
      const double det = dxx * dyy - dxy * dxy;
      const double r = prm.edge_ratio;
      return det > 0.0 && tr * tr * r < (r + 1.0) * (r + 1.0) * det;
    }
    if (std::abs(off[0]) > 2.0 * w || std::abs(off[1]) > 2.0 * h) return false;
    x += static_cast<int>(std::lround(off[0]));
    y += static_cast<int>(std::lround(off[1]));
    l += static_cast<int>(std::lround(off[2]));
    if (l < 1 || l > s || x < kBorder || x >= w - kBorder || y < kBorder || y >= h - kBorder)
      return false;
  }
  return false;
}

struct Gradients {
  ImagePlane gx;
  ImagePlane gy;
};

Gradients gradients(const ImagePlane& p) {
  const int w = p.width();
  const int h = p.height();
  Gradients g{ImagePlane(w, h), ImagePlane(w, h)};
  for (int y = 0; y < h; ++y) {
    const double* r = p.row(y);
    const double* up = p.row(std::max(0, y - 1));
    const double* dn = p.row(std::min(h - 1, y + 1));
    double* ox = g.gx.row(y);
    double* oy = g.gy.row(y);
    for (int x = 0; x < w; ++x) {
      ox[x] = 0.5 * (r[std::min(w - 1, x + 1)] - r[std::max(0, x - 1)]);
      oy[x] = 0.5 * (dn[x] - up[x]);
    }
  }
  return g;
}

double dominant_orientation(const Gradients& g, const Candidate& c, double sigma) {
  constexpr int kOriBins = 36;
  const double ws = 1.5 * sigma;
  const int radius = static_cast<int>(std::lround(3.0 * ws));
  const int cx = static_cast<int>(std::lround(c.ox));
  const int cy = static_cast<int>(std::lround(c.oy));
  std::array<double, kOriBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y < 1 || y >= g.gx.height() - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x < 1 || x >= g.gx.width() - 1) continue;
      const double gx = g.gx.at(x, y);
      const double gy = g.gy.at(x, y);
      const double wgt = std::exp(-(dx * dx + dy * dy) / (2.0 * ws * ws));
      double ang = std::atan2(gy, gx);
      if (ang < 0.0) ang += 2.0 * std::numbers::pi;
      int bin = static_cast<int>(ang / (2.0 * std::numbers::pi) * kOriBins);
      bin = std::clamp(bin, 0, kOriBins - 1);
      hist[bin] += wgt * std::hypot(gx, gy);
    }
  }
  std::array<double, kOriBins> sm{};
  for (int i = 0; i < kOriBins; ++i)
    sm[i] = 0.25 * hist[(i + kOriBins - 1) % kOriBins] + 0.5 * hist[i] + 0.25 * hist[(i + 1) % kOriBins];
  int best = 0;
  for (int i = 1; i < kOriBins; ++i)
    if (sm[i] > sm[best]) best = i;
  const double l = sm[(best + kOriBins - 1) % kOriBins];
  const double r = sm[(best + 1) % kOriBins];
  const double den = l - 2.0 * sm[best] + r;
  const double shift = den != 0.0 ? 0.5 * (l - r) / den : 0.0;
  return (best + 0.5 + shift) * 2.0 * std::numbers::pi / kOriBins;
}

bool describe(const Gradients& g, const Candidate& c, double angle, Descriptor& out) {
  std::array<double, kDescriptorDim> hist{};
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  constexpr double half = 0.5 * (kPatch - 1);
  constexpr double wsig = 0.5 * kPatch;
  for (int j = 0; j < kPatch; ++j) {
    for (int i = 0; i < kPatch; ++i) {
      const double dx = i - half;
      const double dy = j - half;
      const double sx = c.ox + ca * dx - sa * dy;
      const double sy = c.oy + sa * dx + ca * dy;
      const double gx0 = bilinear_sample(g.gx, sx, sy);
      const double gy0 = bilinear_sample(g.gy, sx, sy);
      const double gx = ca * gx0 + sa * gy0;
      const double gy = -sa * gx0 + ca * gy0;
      const double mag = std::hypot(gx, gy) * std::exp(-(dx * dx + dy * dy) / (2.0 * wsig * wsig));
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0.0) ang += 2.0 * std::numbers::pi;
      const double fb = ang / (2.0 * std::numbers::pi) * kBins;
      int b0 = static_cast<int>(std::floor(fb));
      const double tb = fb - b0;
      b0 %= kBins;
      const int b1 = (b0 + 1) % kBins;
      const double fx = (i + 0.5) / (kPatch / kCells) - 0.5;
      const double fy = (j + 0.5) / (kPatch / kCells) - 0.5;
      const int cx0 = static_cast<int>(std::floor(fx));
      const int cy0 = static_cast<int>(std::floor(fy));
      const double tx = fx - cx0;
      const double ty = fy - cy0;
      for (int oy = 0; oy < 2; ++oy) {
        const int cy = cy0 + oy;
        if (cy < 0 || cy >= kCells) continue;
        const double wy = oy ? ty : 1.0 - ty;
        for (int ox = 0; ox < 2; ++ox) {
          const int cx = cx0 + ox;
          if (cx < 0 || cx >= kCells) continue;
          const double wxy = (ox ? tx : 1.0 - tx) * wy * mag;
          double* cell = hist.data() + (cy * kCells + cx) * kBins;
          cell[b0] += wxy * (1.0 - tb);
          cell[b1] += wxy * tb;
        }
      }
    }
  }
  auto normalize = [&hist]() {
    double n2 = 0.0;
    for (double v : hist) n2 += v * v;
    const double n = std::sqrt(n2);
    if (!(n > 1e-12)) return false;
    for (double& v : hist) v /= n;
    return true;
  };
  if (!normalize()) return false;
  for (double& v : hist) v = std::min(v, 0.2);
  if (!normalize()) return false;
  out.values.assign(hist.begin(), hist.end());
  return true;
}

}  // namespace

std::vector<Feature> detect_and_describe(const ImagePlane& p, int max_keypoints,
                                         const DetectorParams& prm) {
  std::vector<Feature> out;
  if (p.width() < kMinSide || p.height() < kMinSide || max_keypoints <= 0) return out;
  const int s = prm.scales_per_octave;
  const std::vector<Octave> octaves = build_scale_space(p, prm);

  std::vector<Candidate> cands;
  for (int o = 0; o < static_cast<int>(octaves.size()); ++o) {
    const auto& dog = octaves[o].dog;
    const int w = dog[0].width();
    const int h = dog[0].height();
    const double step = std::ldexp(1.0, o);
    for (int l0 = 1; l0 <= s; ++l0) {
      for (int y0 = kBorder; y0 < h - kBorder; ++y0) {
        const double* r = dog[l0].row(y0);
        for (int x0 = kBorder; x0 < w - kBorder; ++x0) {
          if (std::abs(r[x0]) <= 0.5 * prm.contrast_threshold) continue;
          if (!is_extremum(dog, l0, x0, y0)) continue;
          int l = l0, x = x0, y = y0;
          double off[3];
          double contrast = 0.0;
          if (!refine(dog, s, prm, l, x, y, off, contrast)) continue;
          Candidate c;
          c.octave = o;
          c.level = l;
          c.ox = x + off[0];
          c.oy = y + off[1];
          c.kp.x = std::clamp(c.ox * step, 0.0, p.width() - 1.0);
          c.kp.y = std::clamp(c.oy * step, 0.0, p.height() - 1.0);
          c.kp.scale = prm.sigma0 * std::pow(2.0, o + (l + off[2]) / s);
          c.kp.score = std::abs(contrast);
          cands.push_back(c);
        }
      }
    }
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.kp.score != b.kp.score) return a.kp.score > b.kp.score;
    if (a.kp.y != b.kp.y) return a.kp.y < b.kp.y;
    if (a.kp.x != b.kp.x) return a.kp.x < b.kp.x;
    return a.kp.scale < b.kp.scale;
  });

  std::map<std::pair<int, int>, Gradients> grad_cache;
  for (const Candidate& c : cands) {
    if (static_cast<int>(out.size()) >= max_keypoints) break;
    auto key = std::make_pair(c.octave, c.level);
    auto it = grad_cache.find(key);
    if (it == grad_cache.end())
      it = grad_cache.emplace(key, gradients(octaves[c.octave].gauss[c.level])).first;
    const double angle =
        prm.rotation_invariant
            ? dominant_orientation(it->second, c, prm.sigma0 * std::pow(2.0, static_cast<double>(c.level) / s))
            : 0.0;
    Feature f;
    f.keypoint = c.kp;
    if (describe(it->second, c, angle, f.descriptor)) out.push_back(std::move(f));
  }
  return out;
}

}  // namespace gigareg
