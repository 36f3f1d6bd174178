#include <fstream>
#include <iterator>

#include <tiffio.h>

#include "doctest.h"
#include "gigareg/error.hpp"
#include "gigareg/io.hpp"
#include "test_util.hpp"

using namespace gigareg;
namespace fs = std::filesystem;

namespace {

RgbImage random_rgb(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

void write_tiff(const fs::path& path, const RgbImage& img) {
  TIFF* t = TIFFOpen(path.c_str(), "w");
  REQUIRE(t != nullptr);
  TIFFSetField(t, TIFFTAG_IMAGEWIDTH, img.width);
  TIFFSetField(t, TIFFTAG_IMAGELENGTH, img.height);
  TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, 3);
  TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, 8);
  TIFFSetField(t, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_RGB);
  TIFFSetField(t, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
  TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, 1);
  for (int y = 0; y < img.height; ++y)
    TIFFWriteScanline(t, const_cast<std::uint8_t*>(img.pixel(0, y)), static_cast<std::uint32_t>(y), 0);
  TIFFClose(t);
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("png round trip") {
  const auto dir = testutil::scratch_dir("io_png");
  const auto img = random_rgb(37, 21, 1);
  write_png(dir / "a.png", img);
  const auto back = read_image(dir / "a.png");
  CHECK(back.width == 37);
  CHECK(back.height == 21);
  CHECK(back.data == img.data);
}

TEST_CASE("tiff reads like png") {
  const auto dir = testutil::scratch_dir("io_tiff");
  const auto img = random_rgb(19, 13, 2);
  write_tiff(dir / "a.tif", img);
  CHECK(read_image(dir / "a.tif").data == img.data);
}

TEST_CASE("plane quantization rounds half to even and clamps") {
  CHECK(quantize(0.0) == 0);
  CHECK(quantize(1.0) == 255);
  CHECK(quantize(-3.0) == 0);
  CHECK(quantize(7.0) == 255);
  CHECK(quantize(0.5 / 255.0) == 0);
  CHECK(quantize(1.5 / 255.0) == 2);
  const auto dir = testutil::scratch_dir("io_plane");
  ImagePlane p(3, 1);
  p.at(0, 0) = 0.0;
  p.at(1, 0) = 128.0 / 255.0;
  p.at(2, 0) = 1.0;
  write_png(dir / "p.png", p);
  const auto back = read_image(dir / "p.png");
  CHECK(back.data == std::vector<std::uint8_t>{0, 0, 0, 128, 128, 128, 255, 255, 255});
}

TEST_CASE("unreadable inputs") {
  const auto dir = testutil::scratch_dir("io_bad");
  write_file(dir / "junk.png", std::string("not an image"));
  CHECK(kind_of([&] { read_image(dir / "junk.png"); }) == ErrorKind::UnreadableInput);
  CHECK(kind_of([&] { read_image(dir / "missing.png"); }) == ErrorKind::UnreadableInput);
}

TEST_CASE("pyramid round trip and regions") {
  const auto dir = testutil::scratch_dir("io_pyr");
  const std::vector<RgbImage> levels{random_rgb(70, 50, 3), random_rgb(35, 25, 4)};
  write_pyramid(dir, levels, 32, 0.5);
  CHECK(fs::exists(dir / "L0_x2_y1.png"));
  CHECK(fs::exists(dir / "L1_x1_y0.png"));
  const auto p = PyramidImage::open(dir);
  REQUIRE(p.levels().size() == 2);
  CHECK(p.spacing_level0() == 0.5);
  CHECK(p.levels()[0].tile_size == 32);
  CHECK(p.read_level(0).data == levels[0].data);
  CHECK(p.read_level(1).data == levels[1].data);

  const auto region = p.read_region(0, 20, 10, 30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x)
      for (int c = 0; c < 3; ++c) CHECK(region.pixel(x, y)[c] == levels[0].pixel(20 + x, 10 + y)[c]);
  CHECK(kind_of([&] { p.read_region(0, 60, 0, 20, 5); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("single image opens as a one-level pyramid") {
  const auto dir = testutil::scratch_dir("io_single");
  const auto img = random_rgb(12, 9, 5);
  write_png(dir / "s.png", img);
  const auto p = PyramidImage::open(dir / "s.png");
  REQUIRE(p.levels().size() == 1);
  CHECK(p.levels()[0].width == 12);
  CHECK(!p.spacing_level0().has_value());
  CHECK(p.read_level(0).data == img.data);
}

TEST_CASE("corrupt pyramids") {
  const auto dir = testutil::scratch_dir("io_corrupt");
  write_pyramid(dir, {random_rgb(70, 50, 6)}, 32);
  fs::remove(dir / "L0_x1_y1.png");
  const auto p = PyramidImage::open(dir);
  CHECK(kind_of([&] { p.read_level(0); }) == ErrorKind::CorruptPyramidManifest);
  // Regions that avoid the missing tile still read.
  CHECK(p.read_region(0, 0, 0, 32, 32).width == 32);

  write_png(dir / "L0_x1_y1.png", random_rgb(5, 5, 7));
  CHECK(kind_of([&] { PyramidImage::open(dir).read_level(0); }) == ErrorKind::CorruptPyramidManifest);

  write_file(dir / "pyramid.json", std::string("{\"levels\": 3}"));
  CHECK(kind_of([&] { PyramidImage::open(dir); }) == ErrorKind::CorruptPyramidManifest);
  fs::remove(dir / "pyramid.json");
  CHECK(kind_of([&] { PyramidImage::open(dir); }) == ErrorKind::CorruptPyramidManifest);
}

TEST_CASE("tile names") {
  CHECK(tile_name("L{level}_x{col}_y{row}.png", 2, 10, 3) == "L2_x10_y3.png");
  CHECK(tile_name("{row}/{col}.png", 0, 1, 4) == "4/1.png");
}

TEST_CASE("affine json round trip") {
  const AffineTransform t{{0.1, -2.5, 3.0e5, 1.0 / 3.0, 7.0, -1e-9}};
  CHECK(affine_from_json(affine_to_json(t)) == t);
  CHECK(affine_to_json(AffineTransform::identity()).find("\"matrix\"") != std::string::npos);
  CHECK(affine_from_json("{\"matrix\": [[1, 0, 2], [0, 1, 3]]}") == AffineTransform::translation(2, 3));
  CHECK_THROWS_AS(affine_from_json("{\"matrix\": [[1, 0], [0, 1]]}"), Error);
  const auto dir = testutil::scratch_dir("io_affine");
  write_affine(dir / "a.json", t);
  CHECK(read_affine(dir / "a.json") == t);
}

TEST_CASE("field bytes match the golden file") {
  DisplacementField u(2, 1);
  u.ux = {1.0, -0.5};
  u.uy = {0.25, 2.0};
  const auto golden = file_bytes(fs::path(GIGAREG_TEST_DATA) / "field_2x1.bin");
  REQUIRE(golden.size() == 40);
  CHECK(field_to_bytes(u) == golden);
  CHECK(field_from_bytes(golden) == u);

  const auto dir = testutil::scratch_dir("io_field");
  write_field(dir / "f.bin", u);
  CHECK(file_bytes(dir / "f.bin") == golden);
  CHECK(read_field(dir / "f.bin") == u);

  auto truncated = golden;
  truncated.pop_back();
  CHECK_THROWS_AS(field_from_bytes(truncated), Error);
  auto bad_magic = golden;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(field_from_bytes(bad_magic), Error);
}

TEST_CASE("field round trip is exact for float values") {
  auto u = testutil::random_field(17, 11, 8, 5.0);
  for (auto* ch : {&u.ux, &u.uy})
    for (double& v : *ch) v = static_cast<float>(v);
  CHECK(field_from_bytes(field_to_bytes(u)) == u);
}

TEST_CASE("round_sig9") {
  CHECK(round_sig9(0.0) == 0.0);
  CHECK(round_sig9(1.0 / 3.0) == 0.333333333);
  CHECK(round_sig9(123456789012.0) == 123456789000.0);
  CHECK(round_sig9(-2.0000000004) == -2.0);
}

}  // TEST_SUITE
