#pragma once

// Image files, tiled pyramid directories and registration artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gigareg/field.hpp"
#include "gigareg/geometry.hpp"
#include "gigareg/image.hpp"

namespace gigareg {

// 8-bit gray, gray+alpha, RGB or RGBA PNG and single-level TIFF; alpha is
// dropped and gray is replicated. Throws UnreadableInput.
RgbImage read_image(const std::filesystem::path& path);

// Throws OutputWriteFailure.
void write_png(const std::filesystem::path& path, const RgbImage& img);
// Plane values are clamped to [0, 1] and rounded half to even.
void write_png(const std::filesystem::path& path, const ImagePlane& p);

std::uint8_t quantize(double v01);
RgbImage plane_to_rgb(const ImagePlane& p);

struct PyramidLevel {
  int level = 0;
  int width = 0;
  int height = 0;
  int tile_size = 0;  // 0 for a single untiled image
  std::string path_pattern;
};

// A pyramid directory (pyramid.json plus tiles) or a single image file seen
// as a one-level pyramid.
class PyramidImage {
 public:
  static PyramidImage open(const std::filesystem::path& path);
  static PyramidImage from_image(RgbImage img);
  // Tiles already on disk, without reading a manifest.
  static PyramidImage from_levels(const std::filesystem::path& dir, std::vector<PyramidLevel> levels,
                                  std::optional<double> spacing_level0 = std::nullopt);

  const std::vector<PyramidLevel>& levels() const { return levels_; }
  std::optional<double> spacing_level0() const { return spacing_; }

  // Whole level assembled from its tiles. Throws CorruptPyramidManifest for
  // missing or mis-sized tiles and UnreadableInput for unreadable ones.
  RgbImage read_level(int index) const;

  // Pixels [x0, x0 + w) x [y0, y0 + h) of a level, which must lie inside it.
  RgbImage read_region(int index, int x0, int y0, int w, int h) const;

 private:
  std::filesystem::path dir_;
  std::vector<PyramidLevel> levels_;
  std::optional<double> spacing_;
  std::optional<RgbImage> memory_;
};

std::string tile_name(const std::string& pattern, int level, int col, int row);

// Writes level images as tiles plus pyramid.json into dir.
void write_pyramid_manifest(const std::filesystem::path& dir, const std::vector<PyramidLevel>& levels,
                            std::optional<double> spacing_level0 = std::nullopt);
void write_pyramid(const std::filesystem::path& dir, const std::vector<RgbImage>& levels, int tile_size,
                   std::optional<double> spacing_level0 = std::nullopt);

// {"matrix": [[a, b, tx], [c, d, ty]]}
std::string affine_to_json(const AffineTransform& t);
AffineTransform affine_from_json(const std::string& text);
void write_affine(const std::filesystem::path& path, const AffineTransform& t);
AffineTransform read_affine(const std::filesystem::path& path);

// "GIGAREGFIELDv001", u32 width, u32 height (little endian), then float32
// ux and uy planes, row-major.
std::vector<std::uint8_t> field_to_bytes(const DisplacementField& u);
DisplacementField field_from_bytes(const std::vector<std::uint8_t>& bytes);
void write_field(const std::filesystem::path& path, const DisplacementField& u);
DisplacementField read_field(const std::filesystem::path& path);

// Writes via a temporary file and rename. Throws OutputWriteFailure.
void write_file(const std::filesystem::path& path, const std::string& content);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& content);
std::string read_text_file(const std::filesystem::path& path);

// Rounds to 9 significant digits so reports are stable across platforms.
double round_sig9(double v);

}  // namespace gigareg
