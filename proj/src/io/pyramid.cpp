#include <algorithm>
#include <cstring>

#include <json.hpp>

#include "gigareg/error.hpp"
#include "gigareg/io.hpp"

namespace gigareg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string tile_name(const std::string& pattern, int level, int col, int row) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size();) {
    auto sub = [&](const char* key, int value) {
      const std::size_t n = std::strlen(key);
      if (pattern.compare(i, n, key) != 0) return false;
      out += std::to_string(value);
      i += n;
      return true;
    };
    if (sub("{level}", level) || sub("{col}", col) || sub("{row}", row)) continue;
    out += pattern[i++];
  }
  return out;
}

PyramidImage PyramidImage::from_image(RgbImage img) {
  PyramidImage p;
  p.levels_.push_back({0, img.width, img.height, 0, ""});
  p.memory_ = std::move(img);
  return p;
}

PyramidImage PyramidImage::from_levels(const fs::path& dir, std::vector<PyramidLevel> levels,
                                      std::optional<double> spacing_level0) {
  PyramidImage p;
  p.dir_ = dir;
  p.levels_ = std::move(levels);
  p.spacing_ = spacing_level0;
  return p;
}

PyramidImage PyramidImage::open(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_directory(path, ec)) return from_image(read_image(path));

  const fs::path manifest = path / "pyramid.json";
  if (!fs::is_regular_file(manifest, ec))
    throw Error(ErrorKind::CorruptPyramidManifest, manifest.string() + ": missing");
  PyramidImage p;
  p.dir_ = path;
  try {
    const auto j = nlohmann::json::parse(read_text_file(manifest));
    for (const auto& l : j.at("levels")) {
      PyramidLevel lv;
      lv.level = l.at("level").get<int>();
      lv.width = l.at("width").get<int>();
      lv.height = l.at("height").get<int>();
      lv.tile_size = l.at("tile_size").get<int>();
      lv.path_pattern = l.at("path_pattern").get<std::string>();
      p.levels_.push_back(lv);
    }
    if (j.contains("spacing_level0") && !j["spacing_level0"].is_null())
      p.spacing_ = j["spacing_level0"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptPyramidManifest, manifest.string() + ": " + e.what());
  }
  std::sort(p.levels_.begin(), p.levels_.end(),
            [](const PyramidLevel& a, const PyramidLevel& b) { return a.level < b.level; });
  if (p.levels_.empty()) throw Error(ErrorKind::CorruptPyramidManifest, "pyramid has no levels");
  for (std::size_t i = 0; i < p.levels_.size(); ++i) {
    const PyramidLevel& l = p.levels_[i];
    if (l.width < 1 || l.height < 1 || l.tile_size < 1)
      throw Error(ErrorKind::CorruptPyramidManifest, "invalid level " + std::to_string(l.level));
    if (i > 0 && l.width >= p.levels_[i - 1].width)
      throw Error(ErrorKind::CorruptPyramidManifest, "level widths must strictly decrease");
  }
  return p;
}

RgbImage PyramidImage::read_level(int index) const {
  const PyramidLevel& l = levels_.at(index);
  return read_region(index, 0, 0, l.width, l.height);
}

RgbImage PyramidImage::read_region(int index, int x0, int y0, int w, int h) const {
  const PyramidLevel& l = levels_.at(index);
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > l.width || y0 + h > l.height)
    throw Error(ErrorKind::InvalidArgument, "region outside pyramid level");
  RgbImage out(w, h);
  if (w == 0 || h == 0) return out;
  if (memory_) {
    for (int y = 0; y < h; ++y)
      std::memcpy(out.pixel(0, y), memory_->pixel(x0, y0 + y), static_cast<std::size_t>(w) * 3);
    return out;
  }
  const int ts = l.tile_size;
  const int cols = (l.width + ts - 1) / ts;
  const int rows = (l.height + ts - 1) / ts;
  for (int row = y0 / ts; row <= (y0 + h - 1) / ts; ++row) {
    for (int col = x0 / ts; col <= (x0 + w - 1) / ts; ++col) {
      const fs::path tp = dir_ / tile_name(l.path_pattern, l.level, col, row);
      std::error_code ec;
      if (!fs::is_regular_file(tp, ec))
        throw Error(ErrorKind::CorruptPyramidManifest, tp.string() + ": missing tile");
      const RgbImage tile = read_image(tp);
      const int ew = col + 1 < cols ? ts : l.width - col * ts;
      const int eh = row + 1 < rows ? ts : l.height - row * ts;
      if (tile.width != ew || tile.height != eh)
        throw Error(ErrorKind::CorruptPyramidManifest, tp.string() + ": unexpected tile size");
      const int tx0 = col * ts;
      const int ty0 = row * ts;
      const int ix0 = std::max(x0, tx0);
      const int ix1 = std::min(x0 + w, tx0 + ew);
      for (int y = std::max(y0, ty0); y < std::min(y0 + h, ty0 + eh); ++y)
        std::memcpy(out.pixel(ix0 - x0, y - y0), tile.pixel(ix0 - tx0, y - ty0),
                    static_cast<std::size_t>(ix1 - ix0) * 3);
    }
  }
  return out;
}

void write_pyramid_manifest(const fs::path& dir, const std::vector<PyramidLevel>& levels,
                            std::optional<double> spacing_level0) {
  ordered_json j;
  j["levels"] = ordered_json::array();
  for (const auto& l : levels)
    j["levels"].push_back({{"level", l.level},
                           {"width", l.width},
                           {"height", l.height},
                           {"tile_size", l.tile_size},
                           {"path_pattern", l.path_pattern}});
  if (spacing_level0) j["spacing_level0"] = *spacing_level0;
  write_file(dir / "pyramid.json", j.dump(2) + "\n");
}

void write_pyramid(const fs::path& dir, const std::vector<RgbImage>& levels, int tile_size,
                   std::optional<double> spacing_level0) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::OutputWriteFailure, dir.string() + ": " + ec.message());
  const std::string pattern = "L{level}_x{col}_y{row}.png";
  std::vector<PyramidLevel> meta;
  for (int li = 0; li < static_cast<int>(levels.size()); ++li) {
    const RgbImage& img = levels[li];
    for (int ty = 0; ty < img.height; ty += tile_size) {
      for (int tx = 0; tx < img.width; tx += tile_size) {
        const int w = std::min(tile_size, img.width - tx);
        const int h = std::min(tile_size, img.height - ty);
        RgbImage tile(w, h);
        for (int y = 0; y < h; ++y)
          std::memcpy(tile.pixel(0, y), img.pixel(tx, ty + y), static_cast<std::size_t>(w) * 3);
        write_png(dir / tile_name(pattern, li, tx / tile_size, ty / tile_size), tile);
      }
    }
    meta.push_back({li, img.width, img.height, tile_size, pattern});
  }
  write_pyramid_manifest(dir, meta, spacing_level0);
}

}  // namespace gigareg
