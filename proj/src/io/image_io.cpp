#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gigareg/error.hpp"
#include "gigareg/io.hpp"

namespace gigareg {
namespace {

bool has_png_signature(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  unsigned char sig[8] = {};
  if (!f.read(reinterpret_cast<char*>(sig), 8)) return false;
  return png_sig_cmp(sig, 0, 8) == 0;
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw Error(ErrorKind::UnreadableInput, path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::UnreadableInput, path.string() + ": " + msg);
  }
  return out;
}

void silence_tiff(const char*, const char*, va_list) {}

RgbImage read_tiff(const std::filesystem::path& path) {
  TIFFSetWarningHandler(silence_tiff);
  TIFFSetErrorHandler(silence_tiff);
  TIFF* tif = TIFFOpen(path.c_str(), "r");
  if (!tif) throw Error(ErrorKind::UnreadableInput, path.string() + ": not a readable TIFF");
  std::uint32_t w = 0, h = 0;
  TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w);
  TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h);
  if (w == 0 || h == 0) {
    TIFFClose(tif);
    throw Error(ErrorKind::UnreadableInput, path.string() + ": empty TIFF");
  }
  std::vector<std::uint32_t> raster(static_cast<std::size_t>(w) * h);
  const int ok = TIFFReadRGBAImageOriented(tif, w, h, raster.data(), ORIENTATION_TOPLEFT, 0);
  TIFFClose(tif);
  if (!ok) throw Error(ErrorKind::UnreadableInput, path.string() + ": unsupported TIFF layout");
  RgbImage out(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < raster.size(); ++i) {
    out.data[3 * i] = static_cast<std::uint8_t>(TIFFGetR(raster[i]));
    out.data[3 * i + 1] = static_cast<std::uint8_t>(TIFFGetG(raster[i]));
    out.data[3 * i + 2] = static_cast<std::uint8_t>(TIFFGetB(raster[i]));
  }
  return out;
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorKind::UnreadableInput, path.string() + ": no such file");
  if (has_png_signature(path)) return read_png(path);
  return read_tiff(path);
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.data.data(), 0, nullptr))
    throw Error(ErrorKind::OutputWriteFailure, path.string() + ": " + pi.message);
}

std::uint8_t quantize(double v01) {
  const double v = std::clamp(v01, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::nearbyint(v));
}

RgbImage plane_to_rgb(const ImagePlane& p) {
  RgbImage out(p.width(), p.height());
  auto v = p.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint8_t q = quantize(v[i]);
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = q;
  }
  return out;
}

void write_png(const std::filesystem::path& path, const ImagePlane& p) { write_png(path, plane_to_rgb(p)); }

}  // namespace gigareg
