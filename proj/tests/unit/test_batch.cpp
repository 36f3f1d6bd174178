#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gigareg/batch.hpp"
#include "gigareg/error.hpp"
#include "test_util.hpp"

using namespace gigareg;
namespace fs = std::filesystem;

namespace {

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.desired_registration_side = 256;
  cfg.initial.scales = {256};
  cfg.initial.angle_step = 90;
  cfg.nonrigid = NonrigidConfig::with_finest_side(256);
  return cfg;
}

fs::path make_run(const std::string& name) {
  const auto dir = testutil::scratch_dir(name);
  write_synthetic_case(generate_case(21, 256, 0.0, 5.0, 2), dir / "a");
  write_synthetic_case(generate_case(22, 256, 90.0, 5.0, 2), dir / "b");
  const auto manifest = R"({
  "output_root": "out",
  "pairs": [
    {"id": "a", "source": "a/source.png", "target": "a/target.png",
     "source_landmarks": "a/landmarks_src.csv", "target_landmarks": "a/landmarks_tgt.csv"},
    {"id": "b", "source": "b/source.png", "target": "b/target.png",
     "source_landmarks": "b/landmarks_src.csv", "target_landmarks": "b/landmarks_tgt.csv"},
    {"id": "missing", "source": "nowhere.png", "target": "a/target.png"}
  ]
})";
  write_file(dir / "manifest.json", std::string(manifest));
  return dir;
}

}  // namespace

TEST_SUITE("batch") {

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto dir = testutil::scratch_dir("batch_manifest");
  write_file(dir / "m.json", std::string(R"({"output_root": "o", "config": "c.json",
    "pairs": [{"id": "p", "source": "s.png", "target": "/abs/t.png", "units": "um", "spacing": 0.25}]})"));
  const auto m = load_manifest(dir / "m.json");
  CHECK(m.output_root == dir / "o");
  CHECK(m.config == dir / "c.json");
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].source == dir / "s.png");
  CHECK(m.pairs[0].target == fs::path("/abs/t.png"));
  CHECK(m.pairs[0].units == LengthUnit::Micrometers);
  CHECK(m.pairs[0].spacing == 0.25);

  write_file(dir / "dup.json", std::string(R"({"pairs": [{"id": "p", "source": "a", "target": "b"},
    {"id": "p", "source": "a", "target": "b"}]})"));
  CHECK_THROWS_AS(load_manifest(dir / "dup.json"), Error);
  write_file(dir / "bad.json", std::string(R"({"pairs": [{"id": "../x", "source": "a", "target": "b"}]})"));
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), Error);
}

TEST_CASE("register continues past a failing pair and evaluate matches an oracle") {
  const auto dir = make_run("batch_run");
  const auto manifest = load_manifest(dir / "manifest.json");
  std::ostringstream log;
  CHECK(run_register(manifest, fast_config(), {2, &log}) == 1);
  CHECK(log.str().find("[missing] error") != std::string::npos);

  const auto run = nlohmann::json::parse(read_text_file(dir / "out" / "run_report.json"));
  CHECK(run["status"] == "partial_failure");
  REQUIRE(run["pairs"].size() == 3);
  CHECK(run["pairs"][0]["status"] == "ok");
  CHECK(run["pairs"][1]["status"] == "ok");
  CHECK(run["pairs"][2]["status"] == "error");
  for (const char* id : {"a", "b"})
    for (const char* f : {"affine.json", "field.bin", "report.json"}) CHECK(fs::exists(dir / "out" / id / f));
  CHECK(!fs::exists(dir / "out" / "missing"));

  // Evaluate only the complete pairs.
  auto good = manifest;
  good.pairs.pop_back();
  CHECK(run_evaluate(good, dir / "eval.json") == 0);
  const auto ev = nlohmann::json::parse(read_text_file(dir / "eval.json"));

  // Registration grid equals level 0 here, and landmarks sit on integer
  // pixels where the interpolating spline equals the stored samples.
  std::vector<double> medians;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::string id = good.pairs[k].id;
    const auto a = read_affine(dir / "out" / id / "affine.json");
    const auto u = read_field(dir / "out" / id / "field.bin");
    const auto src = load_landmarks(*good.pairs[k].source_landmarks, LengthUnit::Pixels, {});
    const auto tgt = load_landmarks(*good.pairs[k].target_landmarks, LengthUnit::Pixels, {});
    std::vector<double> d;
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      const auto j = u.index(static_cast<int>(tgt.points[i].x), static_cast<int>(tgt.points[i].y));
      const Point2 q = a.apply({tgt.points[i].x + u.ux[j], tgt.points[i].y + u.uy[j]});
      d.push_back(std::hypot(q.x - src.points[i].x, q.y - src.points[i].y));
    }
    const auto& pe = ev["pairs"][k];
    CHECK(pe["status"] == "ok");
    CHECK(pe["after"]["median_tre"].get<double>() == doctest::Approx(median(d)).epsilon(1e-6));
    CHECK(pe["after"]["median_tre"].get<double>() < pe["before"]["median_tre"].get<double>());
    medians.push_back(median(d));
  }
  CHECK(ev["aggregate"]["after"]["tre"]["avg_med"].get<double>() ==
        doctest::Approx(0.5 * (medians[0] + medians[1])).epsilon(1e-6));
  CHECK(ev["robustness"] == 1.0);

  // The failed pair makes evaluate fail too, without losing the others.
  CHECK(run_evaluate(manifest, dir / "eval_all.json") == 1);
  const auto ev2 = nlohmann::json::parse(read_text_file(dir / "eval_all.json"));
  CHECK(ev2["pairs"][2]["status"] == "error");
  CHECK(ev2["pairs"][0]["status"] == "ok");
}

}  // TEST_SUITE
