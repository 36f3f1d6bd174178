#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "gigareg/error.hpp"
#include "gigareg/image.hpp"

namespace gigareg {
namespace {

constexpr int kBins = 256;

int bin_of(double v) { return std::clamp(static_cast<int>(std::lround(v * (kBins - 1))), 0, kBins - 1); }

struct TileGrid {
  int nx, ny;
  std::vector<int> x0, y0;  // tile boundaries, size n + 1

  TileGrid(int w, int h, int tiles_x, int tiles_y)
      : nx(std::min(tiles_x, w)), ny(std::min(tiles_y, h)) {
    for (int i = 0; i <= nx; ++i) x0.push_back(static_cast<int>(static_cast<long long>(i) * w / nx));
    for (int j = 0; j <= ny; ++j) y0.push_back(static_cast<int>(static_cast<long long>(j) * h / ny));
  }

  double center_x(int i) const { return (x0[i] + x0[i + 1] - 1) / 2.0; }
  double center_y(int j) const { return (y0[j] + y0[j + 1] - 1) / 2.0; }
};

std::vector<double> tile_lut(const ImagePlane& p, int xa, int xb, int ya, int yb, double clip_limit) {
  std::array<double, kBins> hist{};
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) hist[bin_of(p.at(x, y))] += 1.0;
  const double total = static_cast<double>(xb - xa) * (yb - ya);

  std::vector<double> lut(kBins);
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
  if (occupied <= 1) {
    for (int b = 0; b < kBins; ++b) lut[b] = static_cast<double>(b) / (kBins - 1);
    return lut;
  }

  if (std::isfinite(clip_limit)) {
    const double clip = std::max(1.0, clip_limit * total / kBins);
    double excess = 0.0;
    for (double& h : hist) {
      if (h > clip) {
        excess += h - clip;
        h = clip;
      }
    }
    const double share = excess / kBins;
    for (double& h : hist) h += share;
  }

  double cdf = 0.0;
  for (int b = 0; b < kBins; ++b) {
    cdf += hist[b];
    lut[b] = std::min(1.0, cdf / total);
  }
  return lut;
}

// Index of the lower neighboring tile center and the interpolation weight of
// the upper one.
std::pair<int, double> locate(double c, int n, auto center) {
  if (c <= center(0)) return {0, 0.0};
  if (c >= center(n - 1)) return {n - 1, 0.0};
  int i = 0;
  while (i + 1 < n && center(i + 1) <= c) ++i;
  return {i, (c - center(i)) / (center(i + 1) - center(i))};
}

}  // namespace

std::vector<std::vector<double>> clahe_tile_luts(const ImagePlane& p, const ClaheParams& params) {
  if (!(params.clip_limit > 0.0) || params.tiles_x < 1 || params.tiles_y < 1)
    throw Error(ErrorKind::InvalidArgument, "clahe requires clip_limit > 0 and at least one tile");
  const TileGrid grid(p.width(), p.height(), params.tiles_x, params.tiles_y);
  std::vector<std::vector<double>> luts;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      luts.push_back(tile_lut(p, grid.x0[i], grid.x0[i + 1], grid.y0[j], grid.y0[j + 1], params.clip_limit));
  return luts;
}

ImagePlane clahe(const ImagePlane& p, const ClaheParams& params) {
  const auto luts = clahe_tile_luts(p, params);
  const TileGrid grid(p.width(), p.height(), params.tiles_x, params.tiles_y);
  // Tiles holding a single intensity keep their values unchanged.
  std::vector<bool> flat(luts.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      double lo = 1.0, hi = 0.0;
      for (int y = grid.y0[j]; y < grid.y0[j + 1]; ++y)
        for (int x = grid.x0[i]; x < grid.x0[i + 1]; ++x) {
          lo = std::min(lo, p.at(x, y));
          hi = std::max(hi, p.at(x, y));
        }
      flat[static_cast<std::size_t>(j) * grid.nx + i] = bin_of(lo) == bin_of(hi);
    }
  const auto cx = [&](int i) { return grid.center_x(i); };
  const auto cy = [&](int j) { return grid.center_y(j); };

  std::vector<std::pair<int, double>> col_pos(p.width());
  for (int x = 0; x < p.width(); ++x) col_pos[x] = locate(x, grid.nx, cx);

  ImagePlane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    const auto [j0, wy] = locate(y, grid.ny, cy);
    const int j1 = std::min(j0 + 1, grid.ny - 1);
    for (int x = 0; x < p.width(); ++x) {
      const auto [i0, wx] = col_pos[x];
      const int i1 = std::min(i0 + 1, grid.nx - 1);
      const int b = bin_of(p.at(x, y));
      const double v = p.at(x, y);
      const auto map = [&](int j, int i) {
        const std::size_t t = static_cast<std::size_t>(j) * grid.nx + i;
        return flat[t] ? v : luts[t][b];
      };
      const double top = (1.0 - wx) * map(j0, i0) + wx * map(j0, i1);
      const double bottom = (1.0 - wx) * map(j1, i0) + wx * map(j1, i1);
      out.at(x, y) = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace gigareg
