#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gigareg/image.hpp"
#include "test_util.hpp"

using namespace gigareg;

TEST_SUITE("core_imaging") {
  TEST_CASE("grayscale uses 601 luma") {
    RgbImage black(3, 2);
    for (double v : testutil::values(to_grayscale(black))) CHECK(v == 0.0);

    RgbImage white(3, 2);
    std::fill(white.data.begin(), white.data.end(), 255);
    for (double v : testutil::values(to_grayscale(white))) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    RgbImage red(2, 2);
    for (int i = 0; i < 4; ++i) red.data[3 * i] = 255;
    for (double v : testutil::values(to_grayscale(red))) CHECK(v == doctest::Approx(0.299).epsilon(1e-15));
  }

  TEST_CASE("blur with sigma 0 returns the input") {
    const ImagePlane p = testutil::random_plane(13, 7, 1);
    CHECK(gaussian_blur(p, 0.0) == p);
  }

  TEST_CASE("blur keeps constants") {
    const ImagePlane p(17, 11, 0.5);
    const ImagePlane b = gaussian_blur(p, 2.0);
    for (double v : b.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("blur of an impulse matches a dense convolution") {
    ImagePlane p(9, 9);
    p.at(4, 4) = 1.0;
    const double sigma = 1.0;
    const ImagePlane b = gaussian_blur(p, sigma);
    const int r = static_cast<int>(std::ceil(3 * sigma));
    std::vector<long double> k(2 * r + 1);
    long double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-(long double)(i * i) / (2 * sigma * sigma));
    for (auto& v : k) v /= sum;
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 9; ++x) {
        long double acc = 0;
        for (int j = -r; j <= r; ++j)
          for (int i = -r; i <= r; ++i)
            acc += k[i + r] * k[j + r] * p.at(std::clamp(x + i, 0, 8), std::clamp(y + j, 0, 8));
        CHECK(std::abs(b.at(x, y) - static_cast<double>(acc)) < 1e-15);
      }
  }

  TEST_CASE("blur preserves the mean of a plane with a constant border band") {
    ImagePlane p(40, 30, 0.25);
    const ImagePlane noise = testutil::random_plane(40, 30, 3);
    for (int y = 10; y < 20; ++y)
      for (int x = 10; x < 30; ++x) p.at(x, y) = noise.at(x, y);
    const ImagePlane b = gaussian_blur(p, 1.5);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ma += p.values()[i];
      mb += b.values()[i];
    }
    CHECK(std::abs(ma - mb) / p.size() < 1e-6);
  }

  TEST_CASE("resample identity, constants and checkerboard") {
    const ImagePlane p = testutil::random_plane(10, 6, 4);
    CHECK(resample(p, 10, 6, Interpolation::Bilinear) == p);
    CHECK(resample(p, 10, 6, Interpolation::Bicubic) == p);

    const ImagePlane c(9, 5, 0.3);
    for (auto mode : {Interpolation::Bilinear, Interpolation::Bicubic})
      for (auto [w, h] : {std::pair{3, 2}, std::pair{20, 13}, std::pair{1, 1}})
        for (double v : testutil::values(resample(c, w, h, mode))) CHECK(v == doctest::Approx(0.3).epsilon(1e-14));

    ImagePlane cb(4, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) cb.at(x, y) = (x + y) % 2;
    for (double v : testutil::values(resample(cb, 2, 2, Interpolation::Bilinear))) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("resample follows the align-corners-false mapping") {
    // A horizontal ramp is reproduced exactly by bilinear interpolation.
    ImagePlane ramp(8, 3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 8; ++x) ramp.at(x, y) = x;
    const ImagePlane r = resample(ramp, 5, 3, Interpolation::Bilinear);
    for (int i = 0; i < 5; ++i) {
      const double x = std::clamp((i + 0.5) * 8.0 / 5.0 - 0.5, 0.0, 7.0);
      CHECK(r.at(i, 1) == doctest::Approx(x).epsilon(1e-14));
    }
  }

  TEST_CASE("anti-aliased resample blurs by factor / 2 first") {
    const ImagePlane p = testutil::random_plane(32, 32, 5);
    const ImagePlane a = resample_antialiased(p, 8, 8);
    const ImagePlane b = resample(gaussian_blur(p, 2.0, 2.0), 8, 8, Interpolation::Bilinear);
    CHECK(testutil::max_abs_diff(a, b) == 0.0);
  }

  TEST_CASE("bicubic reproduces samples and constants, border outside") {
    const ImagePlane p = testutil::random_plane(7, 5, 6);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) CHECK(bicubic_sample(p, x, y) == p.at(x, y));
    const ImagePlane c(6, 6, 0.7);
    for (double t : {0.0, 0.3, 1.7, 4.99, 5.0})
      CHECK(bicubic_sample(c, t, 5.0 - t) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(bicubic_sample(p, -10, -10) == 0.0);
    CHECK(bicubic_sample(p, -10, -10, 0.25) == 0.25);
    CHECK(bicubic_sample(p, 6.0001, 2) == 0.0);
  }

  TEST_CASE("bicubic gradient matches finite differences") {
    const ImagePlane p = testutil::smooth_random_plane(12, 12, 7);
    for (auto [x, y] : {std::pair{3.3, 4.6}, std::pair{7.81, 2.05}, std::pair{5.5, 9.25}}) {
      const auto s = bicubic_sample_grad(p, x, y);
      const double h = 1e-6;
      CHECK(s.value == bicubic_sample(p, x, y));
      CHECK(s.dx == doctest::Approx((bicubic_sample(p, x + h, y) - bicubic_sample(p, x - h, y)) / (2 * h)).epsilon(1e-6));
      CHECK(s.dy == doctest::Approx((bicubic_sample(p, x, y + h) - bicubic_sample(p, x, y - h)) / (2 * h)).epsilon(1e-6));
    }
  }

  TEST_CASE("clahe on a constant plane is the identity") {
    for (double c : {0.0, 0.5, 0.37, 1.0}) {
      const ImagePlane p(64, 48, c);
      for (double v : testutil::values(clahe(p))) CHECK(v == c);
    }
  }

  TEST_CASE("clahe with one tile and no clipping is global equalization") {
    const ImagePlane p = testutil::random_plane(37, 23, 8);
    const ImagePlane out = clahe(p, {std::numeric_limits<double>::infinity(), 1, 1});
    std::vector<long double> hist(256, 0);
    for (double v : p.values()) hist[static_cast<int>(std::lround(v * 255))] += 1;
    std::vector<long double> cdf(256);
    long double acc = 0;
    for (int b = 0; b < 256; ++b) cdf[b] = acc += hist[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const int b = static_cast<int>(std::lround(p.values()[i] * 255));
      CHECK(std::abs(out.values()[i] - static_cast<double>(cdf[b] / p.size())) < 1e-12);
    }
  }

  TEST_CASE("clahe output range and monotone tile mappings") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ImagePlane p = testutil::random_plane(70 + seed, 50, seed);
      for (double v : testutil::values(clahe(p))) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (const auto& lut : clahe_tile_luts(p, {}))
        for (std::size_t b = 1; b < lut.size(); ++b) CHECK(lut[b] >= lut[b - 1]);
    }
    // With a single tile the remapping is one monotone curve, so order is
    // preserved across the whole plane.
    const ImagePlane p = testutil::random_plane(40, 40, 9);
    const ImagePlane q = clahe(p, {2.0, 1, 1});
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p.values()[i] > p.values()[i - 1]) CHECK(q.values()[i] >= q.values()[i - 1]);
  }

  TEST_CASE("operations leave their inputs untouched") {
    const ImagePlane p = testutil::random_plane(30, 20, 10);
    const ImagePlane copy = p;
    (void)gaussian_blur(p, 1.2);
    (void)resample(p, 11, 9, Interpolation::Bicubic);
    (void)resample_antialiased(p, 11, 9);
    (void)clahe(p);
    CHECK(p == copy);
  }

  TEST_CASE("fit_max_side keeps the aspect ratio") {
    CHECK(fit_max_side(4000, 3000, 2048) == Size2{2048, 1536});
    CHECK(fit_max_side(300, 1200, 600) == Size2{150, 600});
    CHECK(fit_max_side(1000, 1, 100) == Size2{100, 1});
  }
}
