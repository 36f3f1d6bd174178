#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gigareg/error.hpp"
#include "gigareg/features.hpp"
#include "gigareg/synth.hpp"
#include "../support/oracles.hpp"
#include "test_util.hpp"

using namespace gigareg;

namespace {

ImagePlane blob(int w, int h, double cx, double cy, double sigma) {
  ImagePlane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      p.at(x, y) = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
  return p;
}

MatchSet matches_from(const AffineTransform& t, const std::vector<Point2>& targets) {
  MatchSet ms;
  for (const Point2& q : targets) {
    const Point2 s = t.apply(q);
    Match m;
    m.target = {q.x, q.y, 1.0, 1.0};
    m.source = {s.x, s.y, 1.0, 1.0};
    m.confidence = 1.0;
    ms.matches.push_back(m);
  }
  return ms;
}

std::vector<Point2> random_points(int n, std::uint64_t seed, double extent = 200.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, extent);
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) pts.push_back({d(rng), d(rng)});
  return pts;
}

Descriptor unit_descriptor(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += double(x) * x;
  for (float& x : v) x = static_cast<float>(x / std::sqrt(n));
  return {v};
}

std::string stub(const std::string& mode) {
  return std::string("python3 ") + GIGAREG_STUB_ADAPTER + " " + mode;
}

const AffineTransform kTruth{{0.9, -0.2, 12.0, 0.15, 1.05, -7.0}};

}  // namespace

TEST_SUITE("features") {

TEST_CASE("constant plane has no keypoints") {
  CHECK(detect_and_describe(ImagePlane(64, 64, 0.4), 100).empty());
}

TEST_CASE("planes smaller than 32 pixels have no keypoints") {
  CHECK(detect_and_describe(testutil::random_plane(31, 40, 1), 100).empty());
}

TEST_CASE("a single blob is detected near its center") {
  const auto p = blob(96, 96, 40.0, 52.0, 4.0);
  const auto f = detect_and_describe(p, 10);
  REQUIRE(!f.empty());
  CHECK(std::hypot(f[0].keypoint.x - 40.0, f[0].keypoint.y - 52.0) < 2.0);
}

TEST_CASE("detection is deterministic, bounded and unit norm") {
  const auto p = synth_texture(4, 256);
  const auto a = detect_and_describe(p, 200);
  const auto b = detect_and_describe(p, 200);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() <= 200);
  CHECK(a.size() > 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].keypoint.x == b[i].keypoint.x);
    CHECK(a[i].keypoint.y == b[i].keypoint.y);
    CHECK(a[i].descriptor.values == b[i].descriptor.values);
    REQUIRE(a[i].descriptor.values.size() == static_cast<std::size_t>(kDescriptorDim));
    double n = 0;
    for (float v : a[i].descriptor.values) n += double(v) * v;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-5));
    if (i > 0) CHECK(a[i - 1].keypoint.score >= a[i].keypoint.score);
  }
}

TEST_CASE("rotation-invariant descriptors also come out unit norm") {
  DetectorParams dp;
  dp.rotation_invariant = true;
  const auto f = detect_and_describe(synth_texture(5, 256), 50, dp);
  CHECK(!f.empty());
  for (const auto& x : f) {
    double n = 0;
    for (float v : x.descriptor.values) n += double(v) * v;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("identical descriptor sets match one to one") {
  std::vector<Descriptor> a;
  for (int i = 0; i < 5; ++i) {
    std::vector<float> v(8, 0.0f);
    v[i] = 1.0f;
    a.push_back(unit_descriptor(v));
  }
  const auto m = match_descriptors(a, a);
  REQUIRE(m.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(m[i].index_a == i);
    CHECK(m[i].index_b == i);
    CHECK(m[i].confidence == doctest::Approx(1.0));
  }
}

TEST_CASE("single candidate without a second neighbour is accepted") {
  const std::vector<Descriptor> a{unit_descriptor({1, 2, 3})};
  const std::vector<Descriptor> b{unit_descriptor({1, 2, 2.5})};
  const auto m = match_descriptors(a, b);
  REQUIRE(m.size() == 1);
  CHECK(m[0].confidence == doctest::Approx(1.0));
}

TEST_CASE("ambiguous matches fail the ratio test") {
  const std::vector<Descriptor> a{unit_descriptor({1, 0, 0})};
  const std::vector<Descriptor> b{unit_descriptor({1, 0.1f, 0}), unit_descriptor({1, -0.1f, 0})};
  CHECK(match_descriptors(a, b).empty());
}

TEST_CASE("matching is symmetric") {
  std::mt19937_64 rng(7);
  std::normal_distribution<float> d;
  std::vector<Descriptor> a, b;
  for (int i = 0; i < 40; ++i) {
    std::vector<float> v(16);
    for (float& x : v) x = d(rng);
    a.push_back(unit_descriptor(v));
    for (float& x : v) x += 0.1f * d(rng);
    b.push_back(unit_descriptor(v));
  }
  auto ab = match_descriptors(a, b);
  auto ba = match_descriptors(b, a);
  REQUIRE(ab.size() == ba.size());
  CHECK(ab.size() > 30);
  for (auto& m : ba) std::swap(m.index_a, m.index_b);
  auto key = [](const DescriptorMatch& x, const DescriptorMatch& y) { return x.index_a < y.index_a; };
  std::sort(ab.begin(), ab.end(), key);
  std::sort(ba.begin(), ba.end(), key);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(ab[i].index_a == ba[i].index_a);
    CHECK(ab[i].index_b == ba[i].index_b);
    CHECK(ab[i].confidence == doctest::Approx(ba[i].confidence));
  }
}

TEST_CASE("least squares recovers an exact affine") {
  const auto ms = matches_from(kTruth, random_points(12, 1));
  const auto t = estimate_affine_least_squares(ms);
  for (int i = 0; i < 6; ++i) CHECK(t.m[i] == doctest::Approx(kTruth.m[i]).epsilon(1e-9));
}

TEST_CASE("least squares matches the normal-equation oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto to_pts = random_points(15, 100 + seed);
    std::vector<Point2> from_pts;
    for (const auto& q : to_pts) {
      const Point2 s = kTruth.apply(q);
      from_pts.push_back({s.x + noise(rng), s.y + noise(rng)});
    }
    // A * to ~= from
    const auto got = estimate_affine_least_squares(to_pts, from_pts);
    const auto want = oracle::least_squares_affine(to_pts, from_pts);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(got.m[i] - want.m[i]) < 1e-9 * (1 + std::abs(want.m[i])));
  }
}

TEST_CASE("least squares errors") {
  const auto two = matches_from(kTruth, random_points(2, 2));
  CHECK_THROWS_AS(estimate_affine_least_squares(two), Error);
  try {
    estimate_affine_least_squares(two);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientMatches);
  }
  std::vector<Point2> line;
  for (int i = 0; i < 6; ++i) line.push_back({1.0 * i, 2.0 * i + 1});
  try {
    estimate_affine_least_squares(line, line);
    FAIL("collinear points accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateConfiguration);
  }
}

TEST_CASE("robust affine recovers an exact transform") {
  const auto ms = matches_from(kTruth, random_points(30, 4));
  const auto r = robust_affine(ms);
  CHECK(r.inliers.size() == 30);
  for (int i = 0; i < 6; ++i) CHECK(r.affine.m[i] == doctest::Approx(kTruth.m[i]).epsilon(1e-8));
  CHECK(r.mean_inlier_error < 1e-8);
}

TEST_CASE("robust affine rejects gross outliers") {
  auto ms = matches_from(kTruth, random_points(30, 5));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(0.0, 200.0);
  for (int i = 0; i < 10; ++i) {
    Match m;
    m.target = {d(rng), d(rng), 1.0, 1.0};
    const Point2 s = kTruth.apply({m.target.x, m.target.y});
    m.source = {s.x + 40.0 + d(rng), s.y - 40.0 - d(rng), 1.0, 1.0};
    ms.matches.push_back(m);
  }
  RansacParams rp;
  rp.inlier_tol = 2.0;
  const auto r = robust_affine(ms, rp);
  REQUIRE(r.inliers.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) CHECK(r.inliers[i] == i);
  for (int i = 0; i < 6; ++i) CHECK(r.affine.m[i] == doctest::Approx(kTruth.m[i]).epsilon(1e-8));
}

TEST_CASE("robust affine needs three matches") {
  try {
    robust_affine(matches_from(kTruth, random_points(2, 7)));
    FAIL("two matches accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientMatches);
  }
}

TEST_CASE("robust affine does not depend on match order") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto ms = matches_from(kTruth, random_points(40, 9));
  for (auto& m : ms.matches) {
    m.source.x += noise(rng);
    m.source.y += noise(rng);
  }
  for (int i = 0; i < 8; ++i) ms.matches[i].source.x += 50.0;
  const auto a = robust_affine(ms);
  auto shuffled = ms;
  std::shuffle(shuffled.matches.begin(), shuffled.matches.end(), rng);
  const auto b = robust_affine(shuffled);
  CHECK(a.affine == b.affine);
  CHECK(a.inliers.size() == b.inliers.size());
  CHECK(a.mean_inlier_error == b.mean_inlier_error);
}

TEST_CASE("robust affine error stays small under inlier noise") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.5);
    auto ms = matches_from(kTruth, random_points(50, 20 + seed));
    for (auto& m : ms.matches) {
      m.source.x += noise(rng);
      m.source.y += noise(rng);
    }
    const auto r = robust_affine(ms);
    CHECK(r.inliers.size() >= 45);
    CHECK(r.mean_inlier_error < 1.5);
    for (const auto& p : random_points(5, 40 + seed)) {
      const Point2 a = r.affine.apply(p), b = kTruth.apply(p);
      CHECK(std::hypot(a.x - b.x, a.y - b.y) < 1.0);
    }
  }
}

TEST_CASE("classical matching relates a texture to its translated copy") {
  const auto src = synth_texture(9, 256);
  const auto shifted = src;  // identical images: every match is exact
  const auto ms = classical_match(detect_and_describe(src, 300), detect_and_describe(shifted, 300));
  CHECK(ms.size() > 50);
  CHECK(ms.descriptor_dim == kDescriptorDim);
  const auto r = robust_affine(ms);
  for (int i = 0; i < 6; ++i) CHECK(r.affine.m[i] == doctest::Approx(AffineTransform{}.m[i]).epsilon(1e-6));
}

TEST_CASE("adapter round trip with a fixed reply") {
  const auto dir = testutil::scratch_dir("adapter_ok");
  AdapterOptions opt;
  opt.temp_dir = dir;
  const auto ms = external_match(stub("fixed4"), testutil::random_plane(40, 30, 1), testutil::random_plane(50, 20, 2), opt);
  CHECK(ms.size() == 4);
  CHECK(ms.backend_id == "stub-fixed4");
  CHECK(ms.matches[0].source.x == doctest::Approx(10.0));
  CHECK(ms.matches[0].target.x == doctest::Approx(12.5));
  CHECK(std::filesystem::is_empty(dir));
}

TEST_CASE("adapter failures") {
  const auto src = testutil::random_plane(40, 30, 1);
  for (const char* mode : {"exit", "malformed", "badconf"}) {
    CAPTURE(mode);
    try {
      external_match(stub(mode), src, src);
      FAIL("adapter failure not reported");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::AdapterFailure);
    }
  }
}

TEST_CASE("adapter timeout") {
  AdapterOptions opt;
  opt.timeout = std::chrono::milliseconds(500);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    external_match(stub("sleep"), testutil::random_plane(40, 30, 1), testutil::random_plane(40, 30, 1), opt);
    FAIL("timeout not reported");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AdapterFailure);
  }
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));
}

}  // TEST_SUITE
