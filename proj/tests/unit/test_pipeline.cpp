#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gigareg/error.hpp"
#include "gigareg/pipeline.hpp"
#include "gigareg/synth.hpp"
#include "test_util.hpp"

using namespace gigareg;
namespace fs = std::filesystem;

namespace {

std::vector<PyramidLevel> ladder(std::vector<std::pair<int, int>> sizes) {
  std::vector<PyramidLevel> out;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    out.push_back({static_cast<int>(i), sizes[i].first, sizes[i].second, 256, "L{level}_x{col}_y{row}.png"});
  return out;
}

RgbImage smooth_rgb(int w, int h, std::uint64_t seed) {
  const auto r = testutil::smooth_random_plane(w, h, seed, 2.0);
  const auto g = testutil::smooth_random_plane(w, h, seed + 1, 2.0);
  const auto b = testutil::smooth_random_plane(w, h, seed + 2, 2.0);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.pixel(x, y)[0] = quantize(r.at(x, y));
      img.pixel(x, y)[1] = quantize(g.at(x, y));
      img.pixel(x, y)[2] = quantize(b.at(x, y));
    }
  return img;
}

int max_lsb_diff(const RgbImage& a, const RgbImage& b) {
  int m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(int(a.data[i]) - int(b.data[i])));
  return m;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("pyramid level selection examples") {
  const auto l = ladder({{4000, 3000}, {2000, 1500}, {1000, 750}, {500, 375}});
  CHECK(select_pyramid_level(l, 1500).index == 1);
  CHECK(select_pyramid_level(l, 2000).index == 1);
  CHECK(select_pyramid_level(l, 4000).index == 0);
  CHECK(select_pyramid_level(l, 400).index == 3);
  const auto big = select_pyramid_level(l, 5000);
  CHECK(big.index == 0);
  CHECK(big.warning);
  CHECK(!select_pyramid_level(l, 1500).warning);
  // Portrait levels use the height.
  CHECK(select_pyramid_level(ladder({{300, 4000}, {150, 2000}}), 1800).index == 1);
}

TEST_CASE("pyramid level selection matches brute force") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<int, int>> sizes;
    int w = 200 + static_cast<int>(rng() % 5000), h = 200 + static_cast<int>(rng() % 5000);
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      sizes.push_back({w, h});
      w = std::max(1, w / 2);
      h = std::max(1, h / 2);
    }
    const auto l = ladder(sizes);
    const int desired = 64 + static_cast<int>(rng() % 6000);
    int want = -1;
    for (int i = 0; i < n; ++i)
      if (std::max(sizes[i].first, sizes[i].second) >= desired) want = i;
    const auto got = select_pyramid_level(l, desired);
    CHECK(got.index == std::max(want, 0));
    CHECK(got.warning == (want < 0));
  }
}

TEST_CASE("tiled and in-memory preprocessing agree") {
  const auto dir = testutil::scratch_dir("pl_prep");
  const auto img = smooth_rgb(300, 220, 2);
  write_pyramid(dir, {img}, 64);
  const auto tiled = load_and_preprocess(PyramidImage::open(dir), 256, {});
  const auto mono = load_and_preprocess(PyramidImage::from_image(img), 256, {});
  CHECK(tiled.plane == mono.plane);
  CHECK(tiled.plane.width() == 256);
  CHECK(tiled.plane.height() == 188);
  CHECK(tiled.level0_size == Size2{300, 220});
}

TEST_CASE("pair mapping examples") {
  DisplacementField zero(100, 50);
  const PairMapping same(AffineTransform::identity(), zero, {400, 200}, {400, 200});
  for (Point2 p : {Point2{0, 0}, Point2{123.5, 77.25}, Point2{399, 199}}) {
    const Point2 q = same(p);
    CHECK(q.x == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(p.y).epsilon(1e-12));
  }
  // Source at twice the target resolution: align-corners-false scaling.
  const PairMapping twice(AffineTransform::identity(), zero, {800, 400}, {400, 200});
  const Point2 q = twice({10.0, 20.0});
  CHECK(q.x == doctest::Approx(20.5));
  CHECK(q.y == doctest::Approx(40.5));

  // A constant field of one registration pixel is four level-0 pixels.
  DisplacementField one(100, 50);
  std::fill(one.ux.begin(), one.ux.end(), 1.0);
  const Point2 r = PairMapping(AffineTransform::identity(), one, {400, 200}, {400, 200})({50.0, 60.0});
  CHECK(r.x == doctest::Approx(54.0));
  CHECK(r.y == doctest::Approx(60.0));
}

TEST_CASE("identity warp reproduces the source") {
  const auto img = smooth_rgb(120, 80, 3);
  const auto src = PyramidImage::from_image(img);
  const FullResWarper w(src, DisplacementField(60, 40), AffineTransform::identity(), 120);
  CHECK(w.output_size() == Size2{120, 80});
  CHECK(max_lsb_diff(quantize_rgb(w.render_monolithic(), 120, 80), img) <= 1);
}

TEST_CASE("translation on the registration grid scales to full resolution") {
  const auto img = smooth_rgb(120, 80, 4);
  const auto src = PyramidImage::from_image(img);
  const FullResWarper w(src, DisplacementField(60, 40), AffineTransform::translation(2.0, 0.0), 120);
  const auto out = quantize_rgb(w.render_monolithic(), 120, 80);
  for (int y = 0; y < 80; ++y)
    for (int x = 0; x + 4 < 120; ++x)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(int(out.pixel(x, y)[c]) - int(img.pixel(x + 4, y)[c])) <= 1);
}

TEST_CASE("tiled rendering is bit-identical to monolithic rendering") {
  const auto dir = testutil::scratch_dir("pl_tiles");
  const auto img = smooth_rgb(150, 110, 5);
  write_pyramid(dir, {img}, 32);
  const auto src = PyramidImage::open(dir);
  const auto field = testutil::random_field(75, 55, 6, 1.5);
  const AffineTransform a{{0.97, 0.1, 3.0, -0.08, 1.02, -2.0}};
  const FullResWarper w(src, field, a, 150);
  const auto mono = w.render_monolithic();
  const Size2 s = w.output_size();
  std::vector<double> tiled(mono.size());
  for (int y0 = 0; y0 < s.height; y0 += 23)
    for (int x0 = 0; x0 < s.width; x0 += 37) {
      const int tw = std::min(37, s.width - x0), th = std::min(23, s.height - y0);
      const auto part = w.render(x0, y0, tw, th);
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x)
          for (int c = 0; c < 3; ++c)
            tiled[(static_cast<std::size_t>(y0 + y) * s.width + x0 + x) * 3 + c] =
                part[(static_cast<std::size_t>(y) * tw + x) * 3 + c];
    }
  CHECK(tiled == mono);
}

TEST_CASE("full_res_warp writes a pyramid with box-averaged levels") {
  const auto dir = testutil::scratch_dir("pl_warp");
  const auto img = smooth_rgb(200, 120, 7);
  WarpOptions opt;
  opt.tile_size = 64;
  opt.min_side = 50;
  const Size2 s = full_res_warp(PyramidImage::from_image(img), DisplacementField(100, 60),
                                AffineTransform::identity(), 200, dir / "out", opt);
  CHECK(s == Size2{200, 120});
  const auto out = PyramidImage::open(dir / "out");
  REQUIRE(out.levels().size() == 3);
  CHECK(out.levels()[1].width == 100);
  CHECK(out.levels()[2].width == 50);
  const auto l0 = out.read_level(0), l1 = out.read_level(1);
  CHECK(max_lsb_diff(l0, img) <= 1);
  for (int y = 0; y < l1.height; ++y)
    for (int x = 0; x < l1.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double avg = (l0.pixel(2 * x, 2 * y)[c] + l0.pixel(2 * x + 1, 2 * y)[c] +
                            l0.pixel(2 * x, 2 * y + 1)[c] + l0.pixel(2 * x + 1, 2 * y + 1)[c]) / 4.0;
        CHECK(std::abs(l1.pixel(x, y)[c] - avg) <= 0.5);
      }
}

TEST_CASE("output side is clamped to the source resolution") {
  const auto src = PyramidImage::from_image(smooth_rgb(90, 60, 8));
  const FullResWarper w(src, DisplacementField(45, 30), AffineTransform::identity(), 500);
  CHECK(w.clamped());
  CHECK(w.output_size() == Size2{90, 60});
  const FullResWarper small(src, DisplacementField(45, 30), AffineTransform::identity(), 45);
  CHECK(!small.clamped());
  CHECK(small.output_size() == Size2{45, 30});
}

TEST_CASE("config json round trip and validation") {
  PipelineConfig cfg;
  cfg.desired_registration_side = 1024;
  cfg.initial.scales = {256, 512};
  cfg.initial.backend = MatcherBackend::Adapter;
  cfg.initial.adapter_cmd = "match --fast";
  cfg.nonrigid = NonrigidConfig::with_finest_side(1024);
  cfg.clahe.clip_limit = 3.0;
  const auto j = pipeline_config_to_json(cfg);
  const auto back = pipeline_config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(pipeline_config_to_json(back) == j);
  CHECK(back.initial.backend == MatcherBackend::Adapter);
  CHECK(back.nonrigid.levels.size() == cfg.nonrigid.levels.size());

  CHECK(pipeline_config_from_json(nlohmann::json::object()).desired_registration_side == 2048);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"desired_side": 512})")), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"initial": {"angle": 10}})")), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"desired_registration_side": 100})")), Error);
  CHECK_THROWS_AS(pipeline_config_from_json(nlohmann::json::parse(R"({"initial": {"backend": "magic"}})")), Error);
}

TEST_CASE("register_pair recovers a rotated synthetic case") {
  const auto c = generate_case(11, 512, 90.0, 6.0, 3);
  const auto src = PyramidImage::from_image(plane_to_rgb(c.source));
  const auto tgt = PyramidImage::from_image(plane_to_rgb(c.target));
  PipelineConfig cfg;
  cfg.desired_registration_side = 256;
  cfg.initial.scales = {256};
  cfg.nonrigid = NonrigidConfig::with_finest_side(256);
  const auto r = register_pair(src, tgt, cfg);
  REQUIRE(r.initial.winner.has_value());
  const PairMapping map(r.initial.affine, r.nonrigid.field, {512, 512}, {512, 512});
  const auto err = landmark_errors(c, [&](Point2 p) { return map(p); });
  const auto before = landmark_errors(c, [](Point2 p) { return p; });
  CHECK(median(err) < 0.1 * median(before));
  CHECK(median(err) < 3.0);

  const auto rep = pair_report(r);
  for (const char* k : {"source", "target", "initial_alignment", "nonrigid"}) CHECK(rep.contains(k));
  CHECK(rep["source"]["registration_size"][0] == 256);
}

TEST_CASE("rounded keeps integers and rounds floats") {
  nlohmann::ordered_json j = {{"a", 1.0 / 3.0}, {"b", 7}, {"c", {0.1 + 0.2, "x"}}};
  const auto r = rounded(j);
  CHECK(r["a"].get<double>() == 0.333333333);
  CHECK(r["b"].is_number_integer());
  CHECK(r["c"][0].get<double>() == 0.3);
}

}  // TEST_SUITE
