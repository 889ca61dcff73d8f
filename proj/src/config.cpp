#include "lo/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "lo/error.hpp"

namespace lo {

using nlohmann::json;

std::string_view to_string(FeatureSet s) {
  switch (s) {
    case FeatureSet::Point: return "point";
    case FeatureSet::Planar: return "planar";
    case FeatureSet::PlanarAndEdge: return "planar_and_edge";
  }
  return "planar_and_edge";
}

FeatureSet parse_feature_set(std::string_view s) {
  if (s == "point") return FeatureSet::Point;
  if (s == "planar") return FeatureSet::Planar;
  if (s == "planar_and_edge") return FeatureSet::PlanarAndEdge;
  throw ConfigError("features must be one of point|planar|planar_and_edge, got '" +
                    std::string(s) + "'");
}

std::string_view to_string(PipelineInit m) {
  switch (m) {
    case PipelineInit::Identity: return "identity";
    case PipelineInit::ConstantVelocity: return "constant_velocity";
    case PipelineInit::Imu: return "imu";
    case PipelineInit::GroundTruth: return "ground_truth";
  }
  return "identity";
}

PipelineInit parse_pipeline_init(std::string_view s) {
  if (s == "identity") return PipelineInit::Identity;
  if (s == "constant_velocity") return PipelineInit::ConstantVelocity;
  if (s == "imu") return PipelineInit::Imu;
  if (s == "ground_truth") return PipelineInit::GroundTruth;
  throw ConfigError("init must be one of identity|constant_velocity|imu|ground_truth, got '" +
                    std::string(s) + "'");
}

std::string_view to_string(PriorSource s) {
  return s == PriorSource::GroundTruth ? "ground_truth" : "estimate";
}

PriorSource parse_prior_source(std::string_view s) {
  if (s == "ground_truth") return PriorSource::GroundTruth;
  if (s == "estimate") return PriorSource::Estimate;
  throw ConfigError("prior_source must be ground_truth|estimate, got '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  feature_params.validate(curvature);
  residual.validate();
  icp.validate();
  preprocess.validate();
  if (residual.kind == ResidualKind::PointToEdge) {
    throw ConfigError("residual point_to_edge is applied to edge pairs automatically; choose "
                      "a planar residual");
  }
  if (features == FeatureSet::Point && residual.kind != ResidualKind::PointToPoint) {
    throw ConfigError("features 'point' carry no normals; residual '" +
                      std::string(lo::to_string(residual.kind)) + "' requires planar features");
  }
  if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
  if (max_scans < 2) throw ConfigError("max_scans must be at least 2");
  if (!std::isfinite(association_max_dt)) throw ConfigError("association_max_dt must be finite");
  if (workers < 1) throw ConfigError("workers must be at least 1");
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Vec3 vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("config key '" + key + "': expected [x, y, z]");
  return {get_as<double>(j[0], key), get_as<double>(j[1], key), get_as<double>(j[2], key)};
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Quaterniond quat(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 4) {
    throw ConfigError("config key '" + key + "': expected [qx, qy, qz, qw]");
  }
  const Eigen::Quaterniond q(get_as<double>(j[3], key), get_as<double>(j[0], key),
                             get_as<double>(j[1], key), get_as<double>(j[2], key));
  if (!(q.norm() > 1e-9)) throw ConfigError("config key '" + key + "': zero quaternion");
  return q.normalized();
}

json quat_json(const Eigen::Quaterniond& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

Pose pose_from(const json& j, const std::string& key) {
  reject_unknown(j, {"translation", "rotation_xyzw"}, key);
  Vec3 t = Vec3::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  if (j.contains("translation")) t = vec3(j["translation"], key + ".translation");
  if (j.contains("rotation_xyzw")) q = quat(j["rotation_xyzw"], key + ".rotation_xyzw");
  return Pose(q, t);
}

json pose_json(const Pose& p) {
  return {{"translation", vec3_json(p.translation())}, {"rotation_xyzw", quat_json(p.rotation())}};
}

constexpr double kDeg = std::numbers::pi / 180.0;

void apply_feature_params(FeatureParams& p, const json& j) {
  reject_unknown(j,
                 {"window_half_size", "planar_threshold", "edge_threshold", "knn_k",
                  "max_per_class_per_scanline", "min_scanline_spread", "azimuth_sectors",
                  "edge_suppression", "normal_radius", "normal_points_per_scanline", "normal_scanline_reach",
                  "normal_max_rms", "edge_radius"},
                 "feature_params");
  auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      field = get_as<std::decay_t<decltype(field)>>(j[key], std::string("feature_params.") + key);
    }
  };
  set("window_half_size", p.window_half_size);
  set("planar_threshold", p.planar_threshold);
  set("edge_threshold", p.edge_threshold);
  set("knn_k", p.knn_k);
  set("max_per_class_per_scanline", p.max_per_class_per_scanline);
  set("min_scanline_spread", p.min_scanline_spread);
  set("azimuth_sectors", p.azimuth_sectors);
  set("edge_suppression", p.edge_suppression);
  set("normal_radius", p.normal_radius);
  set("normal_points_per_scanline", p.normal_points_per_scanline);
  set("normal_scanline_reach", p.normal_scanline_reach);
  set("normal_max_rms", p.normal_max_rms);
  set("edge_radius", p.edge_radius);
}

json feature_params_json(const FeatureParams& p) {
  return {{"window_half_size", p.window_half_size},
          {"planar_threshold", p.planar_threshold},
          {"edge_threshold", p.edge_threshold},
          {"knn_k", p.knn_k},
          {"max_per_class_per_scanline", p.max_per_class_per_scanline},
          {"min_scanline_spread", p.min_scanline_spread},
          {"azimuth_sectors", p.azimuth_sectors},
          {"edge_suppression", p.edge_suppression},
          {"normal_radius", p.normal_radius},
          {"normal_points_per_scanline", p.normal_points_per_scanline},
          {"normal_scanline_reach", p.normal_scanline_reach},
          {"normal_max_rms", p.normal_max_rms},
          {"edge_radius", p.edge_radius}};
}

void apply_icp(IcpConfig& c, const json& j) {
  reject_unknown(j,
                 {"max_iterations", "rotation_tol", "translation_tol",
                  "max_correspondence_distance", "re_match_every_iteration", "huber_delta",
                  "max_condition_number"},
                 "icp");
  auto set = [&](const char* key, auto& field) {
    if (j.contains(key)) field = get_as<std::decay_t<decltype(field)>>(j[key], std::string("icp.") + key);
  };
  set("max_iterations", c.max_iterations);
  set("rotation_tol", c.rotation_tol);
  set("translation_tol", c.translation_tol);
  set("max_correspondence_distance", c.max_correspondence_distance);
  set("re_match_every_iteration", c.re_match_every_iteration);
  set("huber_delta", c.huber_delta);
  set("max_condition_number", c.max_condition_number);
}

json icp_json(const IcpConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"rotation_tol", c.rotation_tol},
          {"translation_tol", c.translation_tol},
          {"max_correspondence_distance", c.max_correspondence_distance},
          {"re_match_every_iteration", c.re_match_every_iteration},
          {"huber_delta", c.huber_delta},
          {"max_condition_number", c.max_condition_number}};
}

void apply_preprocess(PreprocessParams& p, const json& j) {
  reject_unknown(j, {"min_range", "max_range", "parallel_angle_min_deg", "discontinuity_ratio"},
                 "preprocess");
  if (j.contains("min_range")) p.min_range = get_as<double>(j["min_range"], "preprocess.min_range");
  if (j.contains("max_range")) p.max_range = get_as<double>(j["max_range"], "preprocess.max_range");
  if (j.contains("parallel_angle_min_deg")) {
    p.parallel_angle_min = kDeg * get_as<double>(j["parallel_angle_min_deg"],
                                                 "preprocess.parallel_angle_min_deg");
  }
  if (j.contains("discontinuity_ratio")) {
    p.discontinuity_ratio = get_as<double>(j["discontinuity_ratio"], "preprocess.discontinuity_ratio");
  }
}

json preprocess_json(const PreprocessParams& p) {
  return {{"min_range", p.min_range},
          {"max_range", p.max_range},
          {"parallel_angle_min_deg", p.parallel_angle_min / kDeg},
          {"discontinuity_ratio", p.discontinuity_ratio}};
}

const std::set<std::string> kExperimentKeys = {
    "datasets",      "dewarp",        "init",          "prior_source", "curvature",
    "feature_params", "features",     "residual",      "epsilon",      "icp",
    "preprocess",    "window_seconds", "max_scans",    "association_max_dt", "seed",
    "align_first_pose",
    "skip_failed",   "record_runtime", "workers",      "trajectory_out", "results_csv"};

std::string str(const json& j, const std::string& key) { return get_as<std::string>(j, key); }

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const json& j) {
  reject_unknown(j, kExperimentKeys, "config");
  if (j.contains("datasets")) {
    const json& d = j["datasets"];
    cfg.datasets.clear();
    if (d.is_string()) {
      cfg.datasets.push_back(d.get<std::string>());
    } else {
      cfg.datasets = get_as<std::vector<std::string>>(d, "datasets");
    }
  }
  if (j.contains("dewarp")) cfg.dewarp = parse_dewarp_method(str(j["dewarp"], "dewarp"));
  if (j.contains("init")) cfg.init = parse_pipeline_init(str(j["init"], "init"));
  if (j.contains("prior_source")) {
    cfg.prior_source = parse_prior_source(str(j["prior_source"], "prior_source"));
  }
  if (j.contains("curvature")) {
    const CurvatureMethod m = parse_curvature_method(str(j["curvature"], "curvature"));
    const FeatureParams old_defaults = default_feature_params(cfg.curvature);
    const FeatureParams new_defaults = default_feature_params(m);
    if (cfg.feature_params.planar_threshold == old_defaults.planar_threshold) {
      cfg.feature_params.planar_threshold = new_defaults.planar_threshold;
    }
    if (cfg.feature_params.edge_threshold == old_defaults.edge_threshold) {
      cfg.feature_params.edge_threshold = new_defaults.edge_threshold;
    }
    cfg.curvature = m;
  }
  if (j.contains("feature_params")) apply_feature_params(cfg.feature_params, j["feature_params"]);
  if (j.contains("features")) cfg.features = parse_feature_set(str(j["features"], "features"));
  if (j.contains("residual")) cfg.residual.kind = parse_residual_kind(str(j["residual"], "residual"));
  if (j.contains("epsilon")) cfg.residual.epsilon = get_as<double>(j["epsilon"], "epsilon");
  if (j.contains("icp")) apply_icp(cfg.icp, j["icp"]);
  if (j.contains("preprocess")) apply_preprocess(cfg.preprocess, j["preprocess"]);
  if (j.contains("window_seconds")) cfg.window_seconds = get_as<double>(j["window_seconds"], "window_seconds");
  if (j.contains("max_scans")) cfg.max_scans = get_as<int>(j["max_scans"], "max_scans");
  if (j.contains("association_max_dt")) {
    cfg.association_max_dt = get_as<double>(j["association_max_dt"], "association_max_dt");
  }
  if (j.contains("align_first_pose")) {
    cfg.align_first_pose = get_as<bool>(j["align_first_pose"], "align_first_pose");
  }
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("skip_failed")) cfg.skip_failed = get_as<bool>(j["skip_failed"], "skip_failed");
  if (j.contains("record_runtime")) cfg.record_runtime = get_as<bool>(j["record_runtime"], "record_runtime");
  if (j.contains("workers")) cfg.workers = get_as<int>(j["workers"], "workers");
  if (j.contains("trajectory_out")) cfg.trajectory_out = str(j["trajectory_out"], "trajectory_out");
  if (j.contains("results_csv")) cfg.results_csv = str(j["results_csv"], "results_csv");
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  return {{"datasets", cfg.datasets},
          {"dewarp", std::string(to_string(cfg.dewarp))},
          {"init", std::string(to_string(cfg.init))},
          {"prior_source", std::string(to_string(cfg.prior_source))},
          {"curvature", std::string(to_string(cfg.curvature))},
          {"feature_params", feature_params_json(cfg.feature_params)},
          {"features", std::string(to_string(cfg.features))},
          {"residual", std::string(to_string(cfg.residual.kind))},
          {"epsilon", cfg.residual.epsilon},
          {"icp", icp_json(cfg.icp)},
          {"preprocess", preprocess_json(cfg.preprocess)},
          {"window_seconds", cfg.window_seconds},
          {"max_scans", cfg.max_scans},
          {"association_max_dt", cfg.association_max_dt},
          {"align_first_pose", cfg.align_first_pose},
          {"seed", cfg.seed},
          {"skip_failed", cfg.skip_failed},
          {"record_runtime", cfg.record_runtime},
          {"workers", cfg.workers},
          {"trajectory_out", cfg.trajectory_out},
          {"results_csv", cfg.results_csv}};
}

SweepConfig sweep_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep config: expected an object");
  SweepConfig s;
  json base = j;
  if (base.contains("grid")) {
    const json g = base["grid"];
    base.erase("grid");
    reject_unknown(g, {"dewarp", "init", "features", "residual", "epsilon", "curvature"}, "grid");
    auto strings = [&](const char* key) {
      return g.contains(key) ? get_as<std::vector<std::string>>(g[key], std::string("grid.") + key)
                             : std::vector<std::string>{};
    };
    for (const auto& v : strings("dewarp")) s.grid.dewarp.push_back(parse_dewarp_method(v));
    for (const auto& v : strings("init")) s.grid.init.push_back(parse_pipeline_init(v));
    for (const auto& v : strings("features")) s.grid.features.push_back(parse_feature_set(v));
    for (const auto& v : strings("residual")) s.grid.residual.push_back(parse_residual_kind(v));
    for (const auto& v : strings("curvature")) s.grid.curvature.push_back(parse_curvature_method(v));
    if (g.contains("epsilon")) s.grid.epsilon = get_as<std::vector<double>>(g["epsilon"], "grid.epsilon");
  }
  if (base.contains("calibration")) {
    const json c = base["calibration"];
    base.erase("calibration");
    reject_unknown(c, {"planar_count", "scans"}, "calibration");
    if (c.contains("planar_count")) s.calibrate_planar_count = get_as<double>(c["planar_count"], "calibration.planar_count");
    if (c.contains("scans")) s.calibration_scans = get_as<int>(c["scans"], "calibration.scans");
    if (s.calibrate_planar_count < 0.0 || s.calibration_scans < 1) {
      throw ConfigError("calibration: planar_count must be >= 0 and scans >= 1");
    }
  }
  apply_config_json(s.base, base);
  return s;
}

json to_json(const SweepConfig& cfg) {
  json j = to_json(cfg.base);
  json g = json::object();
  auto names = [](const auto& values) {
    json a = json::array();
    for (const auto& v : values) a.push_back(std::string(to_string(v)));
    return a;
  };
  if (!cfg.grid.dewarp.empty()) g["dewarp"] = names(cfg.grid.dewarp);
  if (!cfg.grid.init.empty()) g["init"] = names(cfg.grid.init);
  if (!cfg.grid.features.empty()) g["features"] = names(cfg.grid.features);
  if (!cfg.grid.residual.empty()) g["residual"] = names(cfg.grid.residual);
  if (!cfg.grid.epsilon.empty()) g["epsilon"] = cfg.grid.epsilon;
  if (!cfg.grid.curvature.empty()) g["curvature"] = names(cfg.grid.curvature);
  j["grid"] = g;
  if (cfg.calibrate_planar_count > 0.0) {
    j["calibration"] = {{"planar_count", cfg.calibrate_planar_count}, {"scans", cfg.calibration_scans}};
  }
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Synthetic world descriptions

synth::Scene scene_from_json(const json& j) {
  reject_unknown(j, {"box_room", "rooms", "boxes", "poles", "planes"}, "scene");
  synth::Scene scene;
  if (j.contains("box_room")) {
    const json& b = j["box_room"];
    reject_unknown(b, {"size", "center"}, "scene.box_room");
    const Vec3 size = b.contains("size") ? vec3(b["size"], "scene.box_room.size") : Vec3(12, 9, 4);
    const Vec3 center = b.contains("center") ? vec3(b["center"], "scene.box_room.center") : Vec3(0, 0, 1);
    scene = synth::box_room(size, center);
  }
  auto boxes = [&](const char* key, bool room) {
    if (!j.contains(key)) return;
    for (const json& b : j[key]) {
      reject_unknown(b, {"center", "size", "prefix"}, std::string("scene.") + key);
      const Vec3 c = vec3(b.at("center"), "center");
      const Vec3 s = vec3(b.at("size"), "size");
      const std::string prefix = b.value("prefix", room ? "room" : "box");
      room ? synth::add_room(scene, c, s, prefix) : synth::add_box(scene, c, s, prefix);
    }
  };
  try {
    boxes("rooms", true);
    boxes("boxes", false);
    if (j.contains("poles")) {
      for (const json& p : j["poles"]) {
        reject_unknown(p, {"base", "radius", "height", "direction", "length", "label"}, "scene.poles");
        synth::PoleSurface pole;
        pole.base = vec3(p.at("base"), "scene.poles.base");
        pole.radius = p.at("radius").get<double>();
        pole.direction = p.contains("direction") ? vec3(p["direction"], "scene.poles.direction").normalized()
                                                 : Vec3::UnitZ();
        pole.length = p.contains("length") ? p["length"].get<double>() : p.at("height").get<double>();
        pole.label = p.value("label", "pole");
        scene.poles.push_back(pole);
      }
    }
    if (j.contains("planes")) {
      for (const json& p : j["planes"]) {
        reject_unknown(p, {"center", "normal", "axis_u", "half_u", "half_v", "label"}, "scene.planes");
        synth::PlaneSurface plane;
        plane.center = vec3(p.at("center"), "scene.planes.center");
        plane.normal = vec3(p.at("normal"), "scene.planes.normal").normalized();
        plane.axis_u = vec3(p.at("axis_u"), "scene.planes.axis_u").normalized();
        plane.half_u = p.at("half_u").get<double>();
        plane.half_v = p.at("half_v").get<double>();
        plane.label = p.value("label", "plane");
        scene.planes.push_back(plane);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  scene.validate();
  return scene;
}

json to_json(const synth::Scene& scene) {
  json planes = json::array();
  for (const auto& p : scene.planes) {
    planes.push_back({{"center", vec3_json(p.center)},
                      {"normal", vec3_json(p.normal)},
                      {"axis_u", vec3_json(p.axis_u)},
                      {"half_u", p.half_u},
                      {"half_v", p.half_v},
                      {"label", p.label}});
  }
  json poles = json::array();
  for (const auto& p : scene.poles) {
    poles.push_back({{"base", vec3_json(p.base)},
                     {"direction", vec3_json(p.direction)},
                     {"radius", p.radius},
                     {"length", p.length},
                     {"label", p.label}});
  }
  return {{"planes", planes}, {"poles", poles}};
}

synth::MotionSource motion_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant_screw") {
      reject_unknown(j, {"type", "start", "t_start", "angular", "linear"}, "motion");
      synth::ConstantScrew m;
      if (j.contains("start")) m.start = pose_from(j["start"], "motion.start");
      m.t_start = j.value("t_start", 0.0);
      if (j.contains("angular")) m.rate.angular = vec3(j["angular"], "motion.angular");
      if (j.contains("linear")) m.rate.linear = vec3(j["linear"], "motion.linear");
      return synth::MotionSource(m);
    }
    if (type == "polynomial") {
      reject_unknown(j, {"type", "t_start", "coefficients", "rotation_start", "angular_rate"}, "motion");
      synth::PolynomialSlerp m;
      m.t_start = j.value("t_start", 0.0);
      if (j.contains("coefficients")) {
        m.coefficients.clear();
        for (const json& c : j["coefficients"]) m.coefficients.push_back(vec3(c, "motion.coefficients"));
      }
      if (j.contains("rotation_start")) m.rotation_start = quat(j["rotation_start"], "motion.rotation_start");
      if (j.contains("angular_rate")) m.angular_rate = vec3(j["angular_rate"], "motion.angular_rate");
      return synth::MotionSource(m);
    }
    if (type == "waypoints") {
      reject_unknown(j, {"type", "keyframes"}, "motion");
      synth::Waypoints m;
      for (const json& k : j.at("keyframes")) {
        json pose = k;
        const double stamp = pose.at("stamp").get<double>();
        pose.erase("stamp");
        m.keyframes.push_back({stamp, pose_from(pose, "motion.keyframes")});
      }
      validate_trajectory(m.keyframes);
      return synth::MotionSource(m);
    }
    throw ConfigError("motion.type must be constant_screw|polynomial|waypoints, got '" + type + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("motion: ") + e.what());
  }
}

json to_json(const synth::MotionSource& motion) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, synth::ConstantScrew>) {
          return {{"type", "constant_screw"},
                  {"start", pose_json(m.start)},
                  {"t_start", m.t_start},
                  {"angular", vec3_json(m.rate.angular)},
                  {"linear", vec3_json(m.rate.linear)}};
        } else if constexpr (std::is_same_v<T, synth::PolynomialSlerp>) {
          json c = json::array();
          for (const Vec3& v : m.coefficients) c.push_back(vec3_json(v));
          return {{"type", "polynomial"},
                  {"t_start", m.t_start},
                  {"coefficients", c},
                  {"rotation_start", quat_json(m.rotation_start)},
                  {"angular_rate", vec3_json(m.angular_rate)}};
        } else {
          json k = json::array();
          for (const StampedPose& s : m.keyframes) {
            json e = pose_json(s.pose);
            e["stamp"] = s.stamp;
            k.push_back(e);
          }
          return {{"type", "waypoints"}, {"keyframes", k}};
        }
      },
      motion.family());
}

synth::LidarModel lidar_from_json(const json& j) {
  reject_unknown(j,
                 {"num_scanlines", "vertical_fov_min_deg", "vertical_fov_max_deg",
                  "points_per_line", "period", "min_range", "max_range"},
                 "lidar");
  synth::LidarModel m;
  if (j.contains("num_scanlines")) m.num_scanlines = get_as<int>(j["num_scanlines"], "lidar.num_scanlines");
  if (j.contains("vertical_fov_min_deg")) {
    m.vertical_fov_min = kDeg * get_as<double>(j["vertical_fov_min_deg"], "lidar.vertical_fov_min_deg");
  }
  if (j.contains("vertical_fov_max_deg")) {
    m.vertical_fov_max = kDeg * get_as<double>(j["vertical_fov_max_deg"], "lidar.vertical_fov_max_deg");
  }
  if (j.contains("points_per_line")) m.points_per_line = get_as<int>(j["points_per_line"], "lidar.points_per_line");
  if (j.contains("period")) m.period = get_as<double>(j["period"], "lidar.period");
  if (j.contains("min_range")) m.min_range = get_as<double>(j["min_range"], "lidar.min_range");
  if (j.contains("max_range")) m.max_range = get_as<double>(j["max_range"], "lidar.max_range");
  m.validate();
  return m;
}

json to_json(const synth::LidarModel& m) {
  return {{"num_scanlines", m.num_scanlines},
          {"vertical_fov_min_deg", m.vertical_fov_min / kDeg},
          {"vertical_fov_max_deg", m.vertical_fov_max / kDeg},
          {"points_per_line", m.points_per_line},
          {"period", m.period},
          {"min_range", m.min_range},
          {"max_range", m.max_range}};
}

GenConfig gen_from_json(const json& j) {
  reject_unknown(j,
                 {"name", "sequence", "scene", "motion", "lidar", "t_start", "num_scans", "warp",
                  "range_sigma", "seed", "imu_rate", "gravity", "gyro_bias", "accel_bias"},
                 "gen");
  GenConfig g;
  synth::SequenceSpec& s = g.sequence;
  s.scene = j.contains("scene") ? scene_from_json(j["scene"]) : synth::box_room();
  if (j.contains("motion")) s.motion = motion_from_json(j["motion"]);
  if (j.contains("lidar")) s.lidar = lidar_from_json(j["lidar"]);
  if (j.contains("name")) g.name = str(j["name"], "name");
  if (j.contains("sequence")) g.sequence_name = str(j["sequence"], "sequence");
  if (j.contains("t_start")) s.t_start = get_as<double>(j["t_start"], "t_start");
  if (j.contains("num_scans")) s.num_scans = get_as<int>(j["num_scans"], "num_scans");
  if (j.contains("warp")) s.warp = get_as<bool>(j["warp"], "warp");
  if (j.contains("range_sigma")) s.noise.range_sigma = get_as<double>(j["range_sigma"], "range_sigma");
  if (j.contains("seed")) s.noise.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("imu_rate")) s.imu_rate = get_as<double>(j["imu_rate"], "imu_rate");
  if (j.contains("gravity")) s.gravity = vec3(j["gravity"], "gravity");
  if (j.contains("gyro_bias")) s.biases.gyro = vec3(j["gyro_bias"], "gyro_bias");
  if (j.contains("accel_bias")) s.biases.accel = vec3(j["accel_bias"], "accel_bias");
  if (s.num_scans < 1) throw ConfigError("num_scans must be at least 1");
  if (!(s.noise.range_sigma >= 0.0)) throw ConfigError("range_sigma must be non-negative");
  if (!(s.imu_rate > 0.0)) throw ConfigError("imu_rate must be positive");
  return g;
}

json to_json(const GenConfig& g) {
  const synth::SequenceSpec& s = g.sequence;
  return {{"name", g.name},
          {"sequence", g.sequence_name},
          {"scene", to_json(s.scene)},
          {"motion", to_json(s.motion)},
          {"lidar", to_json(s.lidar)},
          {"t_start", s.t_start},
          {"num_scans", s.num_scans},
          {"warp", s.warp},
          {"range_sigma", s.noise.range_sigma},
          {"seed", s.noise.seed},
          {"imu_rate", s.imu_rate},
          {"gravity", vec3_json(s.gravity)},
          {"gyro_bias", vec3_json(s.biases.gyro)},
          {"accel_bias", vec3_json(s.biases.accel)}};
}

}  // namespace lo
