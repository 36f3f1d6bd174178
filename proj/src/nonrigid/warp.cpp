#include "gigareg/error.hpp"
#include "gigareg/nonrigid.hpp"
#include "warp_internal.hpp"

namespace gigareg {

ImagePlane warp(const ImagePlane& p, const DisplacementField& u) {
  if (u.width != p.width() || u.height != p.height())
    throw Error(ErrorKind::ShapeMismatch, "field and image differ in size");
  ImagePlane out(p.width(), p.height());
  for (int y = 0; y < p.height(); ++y) {
    double* dst = out.row(y);
    for (int x = 0; x < p.width(); ++x) {
      const std::size_t i = u.index(x, y);
      dst[x] = bicubic_sample(p, x + u.ux[i], y + u.uy[i]);
    }
  }
  return out;
}

ImagePlane warp_affine(const ImagePlane& src, const AffineTransform& t, int out_w, int out_h) {
  ImagePlane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    double* dst = out.row(y);
    for (int x = 0; x < out_w; ++x) {
      const Point2 q = t.apply({static_cast<double>(x), static_cast<double>(y)});
      dst[x] = bicubic_sample(src, q.x, q.y);
    }
  }
  return out;
}

namespace detail {

void warp_with_gradient(const ImagePlane& p, const DisplacementField& u, ImagePlane& out,
                        std::vector<double>& gx, std::vector<double>& gy) {
  if (u.width != p.width() || u.height != p.height())
    throw Error(ErrorKind::ShapeMismatch, "field and image differ in size");
  if (out.width() != p.width() || out.height() != p.height()) out = ImagePlane(p.width(), p.height());
  gx.resize(u.size());
  gy.resize(u.size());
  auto dst = out.values();
  for (int y = 0; y < p.height(); ++y)
    for (int x = 0; x < p.width(); ++x) {
      const std::size_t i = u.index(x, y);
      const SampleWithGradient s = bicubic_sample_grad(p, x + u.ux[i], y + u.uy[i]);
      dst[i] = s.value;
      gx[i] = s.dx;
      gy[i] = s.dy;
    }
}

}  // namespace detail
}  // namespace gigareg
