#include "gigareg/nonrigid.hpp"

namespace gigareg {
namespace {

// Accumulates the cost of one channel and writes its gradient.
double channel(const std::vector<double>& u, int w, int h, double inv_pixels, std::vector<double>& g) {
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    const double* row = u.data() + static_cast<std::size_t>(y) * w;
    const double* below = y + 1 < h ? row + w : nullptr;
    double* grow = g.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const double dx = x + 1 < w ? row[x + 1] - row[x] : 0.0;
      const double dy = below != nullptr ? below[x] - row[x] : 0.0;
      sum += dx * dx + dy * dy;
      // d/du of the forward differences that involve this pixel.
      double gr = -(dx + dy);
      if (x > 0) gr += row[x] - row[x - 1];
      if (y > 0) gr += row[x] - row[x - w];
      grow[x] = gr * inv_pixels;
    }
  }
  return sum;
}

}  // namespace

FieldCostAndGradient diffusive_reg(const DisplacementField& u) {
  FieldCostAndGradient out;
  out.grad = DisplacementField(u.width, u.height);
  const double inv_pixels = 1.0 / (static_cast<double>(u.width) * u.height);
  const double sum = channel(u.ux, u.width, u.height, inv_pixels, out.grad.ux) +
                     channel(u.uy, u.width, u.height, inv_pixels, out.grad.uy);
  out.cost = 0.5 * sum * inv_pixels;
  return out;
}

double folding_ratio(const DisplacementField& u) {
  if (u.size() == 0) return 0.0;
  std::size_t folded = 0;
  for (int y = 0; y < u.height; ++y)
    for (int x = 0; x < u.width; ++x) {
      const std::size_t i = u.index(x, y);
      const bool has_right = x + 1 < u.width;
      const bool has_below = y + 1 < u.height;
      const double dux_dx = has_right ? u.ux[i + 1] - u.ux[i] : 0.0;
      const double duy_dx = has_right ? u.uy[i + 1] - u.uy[i] : 0.0;
      const double dux_dy = has_below ? u.ux[i + u.width] - u.ux[i] : 0.0;
      const double duy_dy = has_below ? u.uy[i + u.width] - u.uy[i] : 0.0;
      const double det = (1.0 + dux_dx) * (1.0 + duy_dy) - dux_dy * duy_dx;
      if (det <= 0.0) ++folded;
    }
  return static_cast<double>(folded) / static_cast<double>(u.size());
}

}  // namespace gigareg
