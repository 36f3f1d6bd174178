#include <set>

#include "gigareg/error.hpp"
#include "gigareg/pipeline.hpp"

namespace gigareg {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw Error(ErrorKind::InvalidArgument, "unknown config key " + where + "." + key);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_initial(const json& j, InitialAlignmentConfig& c) {
  check_keys(j,
             {"scales", "angle_step", "min_matches", "backend", "adapter_cmd", "adapter_timeout_s",
              "max_keypoints", "ratio", "ransac", "rotation_invariant", "threads"},
             "initial");
  read(j, "scales", c.scales);
  read(j, "angle_step", c.angle_step);
  read(j, "min_matches", c.min_matches);
  read(j, "adapter_cmd", c.adapter_cmd);
  read(j, "max_keypoints", c.max_keypoints);
  read(j, "ratio", c.ratio);
  read(j, "rotation_invariant", c.detector.rotation_invariant);
  read(j, "threads", c.threads);
  if (j.contains("adapter_timeout_s"))
    c.adapter.timeout = std::chrono::milliseconds(
        static_cast<long long>(j.at("adapter_timeout_s").get<double>() * 1000.0));
  c.adapter.max_keypoints = c.max_keypoints;
  if (j.contains("backend")) {
    const std::string b = j.at("backend").get<std::string>();
    if (b == "classical")
      c.backend = MatcherBackend::Classical;
    else if (b == "adapter")
      c.backend = MatcherBackend::Adapter;
    else
      throw Error(ErrorKind::InvalidArgument, "unknown backend " + b);
  }
  if (j.contains("ransac")) {
    const json& r = j.at("ransac");
    check_keys(r, {"inlier_tol", "iterations", "seed"}, "initial.ransac");
    read(r, "inlier_tol", c.ransac.inlier_tol);
    read(r, "iterations", c.ransac.iterations);
    read(r, "seed", c.ransac.seed);
  }
}

void read_nonrigid(const json& j, NonrigidConfig& c) {
  check_keys(j, {"levels", "ncc_window"}, "nonrigid");
  read(j, "ncc_window", c.ncc_window);
  if (j.contains("levels")) {
    c.levels.clear();
    for (const json& l : j.at("levels")) {
      check_keys(l, {"max_side", "iterations", "learning_rate", "theta"}, "nonrigid.levels[]");
      LevelConfig lc;
      read(l, "max_side", lc.max_side);
      read(l, "iterations", lc.iterations);
      read(l, "learning_rate", lc.learning_rate);
      read(l, "theta", lc.theta);
      c.levels.push_back(lc);
    }
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (desired_registration_side < 256)
    throw Error(ErrorKind::InvalidArgument, "desired_registration_side must be at least 256");
  initial.validate();
  nonrigid.validate();
  if (warp.tile_size < 16 || warp.min_side < 1 || warp.threads < 1)
    throw Error(ErrorKind::InvalidArgument, "invalid warp options");
  if (clahe.tiles_x < 1 || clahe.tiles_y < 1 || !(clahe.clip_limit > 0.0))
    throw Error(ErrorKind::InvalidArgument, "invalid CLAHE options");
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  try {
    check_keys(j, {"desired_registration_side", "initial", "nonrigid", "clahe", "warp", "output_dir"}, "config");
    read(j, "desired_registration_side", c.desired_registration_side);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("initial")) read_initial(j.at("initial"), c.initial);
    if (j.contains("nonrigid")) read_nonrigid(j.at("nonrigid"), c.nonrigid);
    if (j.contains("clahe")) {
      const json& k = j.at("clahe");
      check_keys(k, {"clip_limit", "tiles_x", "tiles_y"}, "clahe");
      read(k, "clip_limit", c.clahe.clip_limit);
      read(k, "tiles_x", c.clahe.tiles_x);
      read(k, "tiles_y", c.clahe.tiles_y);
    }
    if (j.contains("warp")) {
      const json& w = j.at("warp");
      check_keys(w, {"tile_size", "min_side", "threads"}, "warp");
      read(w, "tile_size", c.warp.tile_size);
      read(w, "min_side", c.warp.min_side);
      read(w, "threads", c.warp.threads);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j);
}

ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  ordered_json j;
  j["desired_registration_side"] = c.desired_registration_side;
  ordered_json& i = j["initial"];
  i["scales"] = c.initial.scales;
  i["angle_step"] = c.initial.angle_step;
  i["min_matches"] = c.initial.min_matches;
  i["backend"] = c.initial.backend == MatcherBackend::Adapter ? "adapter" : "classical";
  if (!c.initial.adapter_cmd.empty()) i["adapter_cmd"] = c.initial.adapter_cmd;
  i["max_keypoints"] = c.initial.max_keypoints;
  i["ratio"] = c.initial.ratio;
  i["ransac"] = {{"inlier_tol", c.initial.ransac.inlier_tol},
                 {"iterations", c.initial.ransac.iterations},
                 {"seed", c.initial.ransac.seed}};
  i["rotation_invariant"] = c.initial.detector.rotation_invariant;
  ordered_json& n = j["nonrigid"];
  n["levels"] = ordered_json::array();
  for (const LevelConfig& l : c.nonrigid.levels)
    n["levels"].push_back({{"max_side", l.max_side},
                           {"iterations", l.iterations},
                           {"learning_rate", l.learning_rate},
                           {"theta", l.theta}});
  n["ncc_window"] = c.nonrigid.ncc_window;
  j["clahe"] = {{"clip_limit", c.clahe.clip_limit}, {"tiles_x", c.clahe.tiles_x}, {"tiles_y", c.clahe.tiles_y}};
  j["warp"] = {{"tile_size", c.warp.tile_size}, {"min_side", c.warp.min_side}};
  return j;
}

}  // namespace gigareg
