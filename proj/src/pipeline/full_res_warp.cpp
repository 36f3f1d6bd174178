#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gigareg/error.hpp"
#include "gigareg/pipeline.hpp"

namespace gigareg {

namespace fs = std::filesystem;

namespace {

// Pixels of a rectangle of a pyramid level. Taps are clamped against the
// whole level, so a region that covers every tap reproduces the full-level
// result exactly.
struct RegionView {
  const RgbImage* pixels;
  int x0, y0;
  int level_w, level_h;

  void sample(double x, double y, double out[3]) const {
    out[0] = out[1] = out[2] = 0.0;
    if (!(x >= 0.0 && x <= level_w - 1.0 && y >= 0.0 && y <= level_h - 1.0)) return;
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    double wx[4];
    double wy[4];
    cubic_weights(x - fx, wx);
    cubic_weights(y - fy, wy);
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    int xs[4];
    for (int i = 0; i < 4; ++i) xs[i] = std::clamp(ix - 1 + i, 0, level_w - 1) - x0;
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) {
        const int yy = std::clamp(iy - 1 + j, 0, level_h - 1) - y0;
        const std::uint8_t* row = pixels->data.data() + static_cast<std::size_t>(yy) * pixels->width * 3;
        double racc = 0.0;
        for (int i = 0; i < 4; ++i) racc = racc + wx[i] * row[xs[i] * 3 + c];
        acc = acc + wy[j] * racc;
      }
      out[c] = acc;
    }
  }
};

std::vector<double> render_from(const RegionView& view, const std::vector<Point2>& coords) {
  std::vector<double> out(coords.size() * 3);
  for (std::size_t i = 0; i < coords.size(); ++i) view.sample(coords[i].x, coords[i].y, out.data() + 3 * i);
  return out;
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

FullResWarper::FullResWarper(const PyramidImage& src, const DisplacementField& field, const AffineTransform& affine,
                             int out_side)
    : src_(src), field_(field) {
  if (field.width < 1 || field.height < 1) throw Error(ErrorKind::ShapeMismatch, "empty displacement field");
  const Size2 level0{src.levels()[0].width, src.levels()[0].height};
  const int max0 = std::max(level0.width, level0.height);
  if (out_side > max0) {
    out_side = max0;
    clamped_ = true;
  }
  out_ = fit_max_side(field.width, field.height, std::max(1, out_side));
  level_ = select_pyramid_level(src, out_side);
  level_size_ = {src.levels()[level_.index].width, src.levels()[level_.index].height};
  const Size2 sreg = source_registration_size(level0, field);
  out_to_src_ = compose(compose(grid_rescale(out_.width, out_.height, field.width, field.height), affine),
                        grid_rescale(sreg.width, sreg.height, level_size_.width, level_size_.height));
}

std::vector<Point2> FullResWarper::source_coords(int x0, int y0, int w, int h) const {
  std::vector<Point2> coords(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ox = x0 + x;
      const double oy = y0 + y;
      const auto d = field_.at_grid(ox, oy, out_.width, out_.height);
      coords[static_cast<std::size_t>(y) * w + x] = out_to_src_.apply({ox + d.x, oy + d.y});
    }
  return coords;
}

std::vector<double> FullResWarper::render(int x0, int y0, int w, int h) const {
  const std::vector<Point2> coords = source_coords(x0, y0, w, h);
  const int lw = level_size_.width;
  const int lh = level_size_.height;
  double xmin = lw, xmax = -1.0, ymin = lh, ymax = -1.0;
  for (const Point2& p : coords) {
    if (!(p.x >= 0.0 && p.x <= lw - 1.0 && p.y >= 0.0 && p.y <= lh - 1.0)) continue;
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  if (xmax < 0.0) return std::vector<double>(coords.size() * 3, 0.0);
  const int rx0 = std::max(0, static_cast<int>(std::floor(xmin)) - 1);
  const int ry0 = std::max(0, static_cast<int>(std::floor(ymin)) - 1);
  const int rx1 = std::min(lw - 1, static_cast<int>(std::floor(xmax)) + 2);
  const int ry1 = std::min(lh - 1, static_cast<int>(std::floor(ymax)) + 2);
  const RgbImage region = src_.read_region(level_.index, rx0, ry0, rx1 - rx0 + 1, ry1 - ry0 + 1);
  return render_from(RegionView{&region, rx0, ry0, lw, lh}, coords);
}

std::vector<double> FullResWarper::render_monolithic() const {
  const RgbImage whole = src_.read_level(level_.index);
  return render_from(RegionView{&whole, 0, 0, level_size_.width, level_size_.height},
                     source_coords(0, 0, out_.width, out_.height));
}

RgbImage quantize_rgb(const std::vector<double>& values, int w, int h) {
  RgbImage out(w, h);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(std::nearbyint(std::clamp(values[i], 0.0, 255.0)));
  return out;
}

Size2 full_res_warp(const PyramidImage& src, const DisplacementField& field, const AffineTransform& affine,
                    int out_side, const fs::path& out_dir, const WarpOptions& options) {
  const FullResWarper warper(src, field, affine, out_side);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::OutputWriteFailure, out_dir.string() + ": " + ec.message());

  const std::string pattern = "L{level}_x{col}_y{row}.png";
  const int ts = options.tile_size;
  std::vector<PyramidLevel> levels;
  Size2 size = warper.output_size();
  levels.push_back({0, size.width, size.height, ts, pattern});
  {
    const int cols = (size.width + ts - 1) / ts;
    const int rows = (size.height + ts - 1) / ts;
    parallel_for(static_cast<std::size_t>(cols) * rows, options.threads, [&](std::size_t k) {
      const int col = static_cast<int>(k % cols);
      const int row = static_cast<int>(k / cols);
      const int w = std::min(ts, size.width - col * ts);
      const int h = std::min(ts, size.height - row * ts);
      write_png(out_dir / tile_name(pattern, 0, col, row), quantize_rgb(warper.render(col * ts, row * ts, w, h), w, h));
    });
  }

  // Lower levels from the tiles already written, 2 x 2 box average.
  while (std::max(size.width, size.height) > options.min_side) {
    const PyramidImage prev = PyramidImage::from_levels(out_dir, {levels.back()});
    const Size2 prev_size = size;
    size = {(size.width + 1) / 2, (size.height + 1) / 2};
    const int level = static_cast<int>(levels.size());
    const int cols = (size.width + ts - 1) / ts;
    const int rows = (size.height + ts - 1) / ts;
    parallel_for(static_cast<std::size_t>(cols) * rows, options.threads, [&](std::size_t k) {
      const int col = static_cast<int>(k % cols);
      const int row = static_cast<int>(k / cols);
      const int w = std::min(ts, size.width - col * ts);
      const int h = std::min(ts, size.height - row * ts);
      const int px0 = 2 * col * ts;
      const int py0 = 2 * row * ts;
      const int pw = std::min(2 * w, prev_size.width - px0);
      const int ph = std::min(2 * h, prev_size.height - py0);
      const RgbImage in = prev.read_region(0, px0, py0, pw, ph);
      RgbImage out(w, h);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            int n = 0;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const int sx = 2 * x + dx;
                const int sy = 2 * y + dy;
                if (sx >= pw || sy >= ph) continue;
                acc += in.pixel(sx, sy)[c];
                ++n;
              }
            out.pixel(x, y)[c] = static_cast<std::uint8_t>(std::nearbyint(acc / n));
          }
      write_png(out_dir / tile_name(pattern, level, col, row), out);
    });
    levels.push_back({level, size.width, size.height, ts, pattern});
  }

  std::optional<double> spacing;
  if (src.spacing_level0()) {
    const Size2 l0{src.levels()[0].width, src.levels()[0].height};
    spacing = *src.spacing_level0() * std::max(l0.width, l0.height) /
              std::max(warper.output_size().width, warper.output_size().height);
  }
  write_pyramid_manifest(out_dir, levels, spacing);
  return warper.output_size();
}

}  // namespace gigareg
