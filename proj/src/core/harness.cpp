#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "core/circular.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/generative.hpp"
#include "core/inference.hpp"
#include "core/io.hpp"
#include "core/learning.hpp"
#include "core/likelihood.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"
#include "core/tracking.hpp"

namespace fs = std::filesystem;

namespace b3d {

namespace {

constexpr double kPi = 3.141592653589793238462643;
constexpr double kTwoPi = 2.0 * kPi;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_index(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) line_ << ',';
      line_ << header[i];
    }
    rows_.push_back(line_.str());
    line_.str("");
  }

  CsvWriter& field(const std::string& v) {
    if (col_++) line_ << ',';
    line_ << v;
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }

  void end_row() {
    rows_.push_back(line_.str());
    line_.str("");
    col_ = 0;
  }

  void save(const std::string& path) const {
    std::string out;
    for (const std::string& row : rows_) {
      out += row;
      out += '\n';
    }
    write_file_atomic(path, out);
  }

 private:
  std::vector<std::string> rows_;
  std::ostringstream line_;
  int col_ = 0;
};

// ---- shared config fragments ----

CameraIntrinsics parse_intrinsics(ConfigReader r) {
  CameraIntrinsics k;
  k.fx = r.get<double>("fx");
  k.fy = r.get<double>("fy");
  k.cx = r.get<double>("cx");
  k.cy = r.get<double>("cy");
  k.width = r.get<std::uint32_t>("width");
  k.height = r.get<std::uint32_t>("height");
  k.near = r.get<double>("near");
  k.far = r.get<double>("far");
  r.finish();
  k.validate();
  return k;
}

Json default_intrinsics_json() {
  return Json{{"fx", 64.0},  {"fy", 64.0},   {"cx", 31.5},  {"cy", 31.5},
              {"width", 64}, {"height", 64}, {"near", 0.1}, {"far", 5.0}};
}

CameraPrior parse_camera_prior(ConfigReader r) {
  auto interval = [&](const std::string& key, double lo, double hi) {
    const Json* v = r.raw_optional(key);
    if (!v) return std::pair<double, double>(lo, hi);
    require(v->is_array() && v->size() == 2, ErrorCode::config,
            r.context() + ": '" + key + "' must be [lo, hi]");
    return std::pair<double, double>((*v)[0].get<double>(), (*v)[1].get<double>());
  };
  CameraPrior prior;
  std::tie(prior.distance_lo, prior.distance_hi) = interval("distance", 0.5, 1.5);
  std::tie(prior.azimuth_lo, prior.azimuth_hi) = interval("azimuth", 0.0, kTwoPi);
  std::tie(prior.altitude_lo, prior.altitude_hi) =
      interval("altitude", kPi / 6, kPi / 3);
  r.finish();
  prior.validate();
  return prior;
}

Json default_camera_prior_json() {
  return Json{{"distance", {0.5, 1.5}},
              {"azimuth", {0.0, kTwoPi}},
              {"altitude", {kPi / 6, kPi / 3}}};
}

std::shared_ptr<const ObjectModel> parse_table(ConfigReader r) {
  const double width = r.get<double>("width");
  const double height = r.get<double>("height");
  const double thickness = r.get_or<double>("thickness", 0.01);
  r.finish();
  return std::make_shared<ObjectModel>(ObjectModel::table(width, height, thickness));
}

NoiseParams parse_noise(ConfigReader r) {
  NoiseParams np;
  np.p_outlier = r.get<double>("p_outlier");
  np.sigma_noise = r.get<double>("sigma_noise");
  r.finish();
  return np;
}

Schedule parse_schedule(ConfigReader r) {
  auto stage = [&](const Json& v, const std::string& what) {
    require(v.is_array() && v.size() == 3, ErrorCode::config,
            what + " must be [n_dx, n_dy, n_dtheta]");
    ScheduleStage s{v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
    s.validate();
    return s;
  };
  Schedule schedule;
  schedule.stage0 = stage(r.raw("stage0"), r.context() + ".stage0");
  schedule.refine.clear();
  const Json& refine = r.raw("refine");
  require(refine.is_array(), ErrorCode::config, r.context() + ".refine must be an array");
  for (const Json& v : refine)
    schedule.refine.push_back(stage(v, r.context() + ".refine[]"));
  r.finish();
  return schedule;
}

Json default_schedule_json() {
  return Json{{"stage0", {10, 10, 8}}, {"refine", {{5, 5, 5}, {5, 5, 5}}}};
}

NoiseGrid parse_noise_grid(ConfigReader r, double sigma_max) {
  NoiseGrid grid;
  if (r.has("entries")) {
    const Json& entries = r.raw("entries");
    require(entries.is_array() && !entries.empty(), ErrorCode::config,
            r.context() + ".entries must be a non-empty array");
    for (const Json& e : entries) {
      require(e.is_array() && e.size() == 2, ErrorCode::config,
              r.context() + ".entries elements must be [p_outlier, sigma_noise]");
      grid.entries.push_back({e[0].get<double>(), e[1].get<double>()});
    }
  } else {
    const Json& ps = r.raw("p_outlier");
    const Json& sigmas = r.raw("sigma");
    require(ps.is_array() && sigmas.is_array(), ErrorCode::config,
            r.context() + ": 'p_outlier' and 'sigma' must be arrays");
    for (const Json& p : ps)
      for (const Json& s : sigmas)
        grid.entries.push_back({p.get<double>(), s.get<double>()});
  }
  r.finish();
  for (const NoiseParams& np : grid.entries) {
    require(np.p_outlier >= 0 && np.p_outlier <= 1 && np.sigma_noise > 0 &&
                np.sigma_noise <= sigma_max,
            ErrorCode::config, "noise grid entry outside support");
  }
  return grid;
}

Json default_noise_grid_json(double sigma_max) {
  return Json{{"p_outlier", {0.05, 0.3, 0.8}},
              {"sigma", {0.25 * sigma_max, 0.5 * sigma_max, sigma_max}}};
}

// "window": radius in pixels, or -1 for the untruncated likelihood
void parse_window(ConfigReader& r, ModelConfig& model) {
  const int w = r.get_or<int>("window", 2);
  model.windowed = w >= 0;
  model.window = std::max(w, 0);
}

SigmaPrefactor parse_prefactor(ConfigReader& r) {
  const std::string mode = r.get_or<std::string>("prefactor", "printed");
  if (mode == "printed") return SigmaPrefactor::printed;
  if (mode == "uniform") return SigmaPrefactor::uniform;
  fail(ErrorCode::config, "prefactor must be 'printed' or 'uniform'");
}

Pose parse_pose_or_path(const Json& v, const fs::path& base) {
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = base / p;
    return pose_from_json(load_json_file(p.string()));
  }
  return pose_from_json(v);
}

std::vector<Pose> parse_pose_list(const Json& v, const fs::path& base) {
  Json list = v;
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = base / p;
    list = load_json_file(p.string());
  }
  require(list.is_array(), ErrorCode::config, "pose list must be a JSON array");
  std::vector<Pose> poses;
  for (const Json& pj : list) poses.push_back(pose_from_json(pj));
  return poses;
}

struct DatasetItem {
  DepthImage observation;
  Pose camera;
  SceneGraph scene;  // ground truth (latent children only)
  NoiseParams noise;
};

std::vector<DatasetItem> load_dataset(const std::string& dir, const Library& library) {
  const fs::path base(dir);
  const Json manifest = load_json_file((base / "manifest.json").string());
  require(manifest.contains("items") && manifest.at("items").is_array(),
          ErrorCode::io, dir + ": manifest has no items array");
  std::vector<DatasetItem> items;
  for (const Json& ij : manifest.at("items")) {
    DatasetItem item;
    item.observation =
        load_depth_image((base / ij.at("observation").get<std::string>()).string());
    item.camera = pose_from_json(
        load_json_file((base / ij.at("camera").get<std::string>()).string()));
    item.scene = scene_from_json(
        load_json_file((base / ij.at("scene").get<std::string>()).string()), library);
    if (ij.contains("noise")) {
      item.noise.p_outlier = ij.at("noise").at("p_outlier").get<double>();
      item.noise.sigma_noise = ij.at("noise").at("sigma_noise").get<double>();
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<SceneChild> base_children_from_config(ConfigReader& r,
                                                  const Library& library,
                                                  const fs::path& base) {
  const Json* v = r.raw_optional("base_scene");
  if (!v) return {};
  Json scene_json = *v;
  if (v->is_string()) {
    fs::path p = v->get<std::string>();
    if (p.is_relative()) p = base / p;
    scene_json = load_json_file(p.string());
  }
  return scene_from_json(scene_json, library).children;
}

// ---- learn ----

Json default_learn_config() {
  return Json{{"seed", 0},
              {"threads", 0},
              {"frames", Json::array()},
              {"poses", Json::array()},
              {"intrinsics", default_intrinsics_json()},
              {"crop_min", {-0.25, -0.25, 0.001}},
              {"crop_max", {0.25, 0.25, 0.5}},
              {"resolution", 0.01},
              {"object_id", 0},
              {"output_model", ""},
              {"manifest", ""}};
}

void cmd_learn(const Json& config) {
  ConfigReader r(config, "learn");
  r.get_or<std::uint64_t>("seed", 0);
  r.get_or<int>("threads", 0);
  const auto frame_paths = r.get<std::vector<std::string>>("frames");
  require(!frame_paths.empty(), ErrorCode::config, "learn: no frames given");
  const std::vector<Pose> poses = parse_pose_list(r.raw("poses"), fs::current_path());
  const CameraIntrinsics k = parse_intrinsics(r.object("intrinsics"));
  const auto crop_min = r.get<std::vector<double>>("crop_min");
  const auto crop_max = r.get<std::vector<double>>("crop_max");
  require(crop_min.size() == 3 && crop_max.size() == 3, ErrorCode::config,
          "learn: crop bounds must have 3 components");
  const double resolution = r.get_or<double>("resolution", 0.01);
  const int object_id = r.get_or<int>("object_id", 0);
  const std::string output_model = r.get<std::string>("output_model");
  require(!output_model.empty(), ErrorCode::config, "learn: output_model is required");
  const std::string manifest = r.get_or<std::string>("manifest", "");
  r.finish();

  std::vector<DepthImage> frames;
  for (const std::string& p : frame_paths) frames.push_back(load_depth_image(p));

  const ObjectModel model = learn_object(
      frames, poses, k, Vec3(crop_min[0], crop_min[1], crop_min[2]),
      Vec3(crop_max[0], crop_max[1], crop_max[2]), resolution, object_id);
  save_voxel_grid(model.grid, output_model);

  if (!manifest.empty()) {
    Json mj = fs::exists(manifest) ? load_json_file(manifest)
                                   : Json{{"models", Json::array()}};
    Json models = Json::array();
    for (const Json& m : mj.value("models", Json::array()))
      if (m.at("id").get<int>() != object_id) models.push_back(m);
    const fs::path manifest_dir = fs::path(manifest).parent_path();
    models.push_back(
        {{"id", object_id},
         {"path", fs::relative(output_model, manifest_dir.empty() ? "." : manifest_dir)
                      .string()}});
    std::sort(models.begin(), models.end(), [](const Json& a, const Json& b) {
      return a.at("id").get<int>() < b.at("id").get<int>();
    });
    save_json_file(Json{{"models", models}}, manifest);
  }
}

// ---- generate ----

Json default_generate_config() {
  return Json{{"seed", 0},
              {"threads", 0},
              {"output_dir", ""},
              {"count", 10},
              {"library", ""},
              {"table", {{"width", 0.5}, {"height", 0.5}}},
              {"intrinsics", default_intrinsics_json()},
              {"camera_prior", default_camera_prior_json()},
              {"n_objects", 1},
              {"sigma_max", 0.1},
              {"base_scene", nullptr}};
}

void cmd_generate(const Json& config) {
  ConfigReader r(config, "generate");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  r.get_or<int>("threads", 0);
  const std::string output_dir = r.get<std::string>("output_dir");
  require(!output_dir.empty(), ErrorCode::config, "generate: output_dir is required");
  const int count = r.get<int>("count");
  require(count >= 0, ErrorCode::config, "generate: count must be >= 0");
  const std::string library_path = r.get<std::string>("library");
  const Library library = load_library(library_path);
  auto table = parse_table(r.object("table"));
  const CameraIntrinsics k = parse_intrinsics(r.object("intrinsics"));
  const CameraPrior prior = parse_camera_prior(r.object("camera_prior"));
  const int n_objects = r.get_or<int>("n_objects", 1);
  const double sigma_max = r.get_or<double>("sigma_max", 0.1);
  NoiseParams fixed_noise;
  bool has_fixed_noise = false;
  if (const Json* nj = r.raw_optional("noise"); nj && !nj->is_null()) {
    fixed_noise = parse_noise(ConfigReader(*nj, "generate.noise"));
    has_fixed_noise = true;
  }
  const std::vector<SceneChild> base_children =
      base_children_from_config(r, library, fs::current_path());
  r.finish();

  const fs::path out(output_dir);
  fs::create_directories(out);
  const Rng root(seed);

  Json items = Json::array();
  for (int i = 0; i < count; ++i) {
    Rng rng = root.split(0x6e, static_cast<std::uint64_t>(i));
    SceneGraph latent = sample_scene_prior(rng, n_objects, library, table);
    const Pose camera = sample_camera_prior(prior, rng);

    SceneGraph full;
    full.table = table;
    full.children = base_children;
    full.children.insert(full.children.end(), latent.children.begin(),
                         latent.children.end());
    const DepthImage rendered = render_depth(full, camera, k);

    NoiseParams noise = fixed_noise;
    if (!has_fixed_noise) {
      noise.p_outlier = rng.uniform();
      do {
        noise.sigma_noise = rng.uniform(0.0, sigma_max);
      } while (noise.sigma_noise <= 0.0);
    }
    const DepthImage observed = sample_observation(rendered, k, noise, rng);

    const std::string stem = format_index(i);
    save_depth_image(observed, (out / ("obs_" + stem + ".sdpt")).string());
    save_json_file(scene_to_json(latent), (out / ("scene_" + stem + ".json")).string());
    save_json_file(pose_to_json(camera), (out / ("camera_" + stem + ".json")).string());
    items.push_back({{"observation", "obs_" + stem + ".sdpt"},
                     {"scene", "scene_" + stem + ".json"},
                     {"camera", "camera_" + stem + ".json"},
                     {"noise",
                      {{"p_outlier", noise.p_outlier},
                       {"sigma_noise", noise.sigma_noise}}}});
  }

  save_json_file(Json{{"command", "generate"},
                      {"seed", seed},
                      {"config", config},
                      {"items", items}},
                 (out / "manifest.json").string());
}

// ---- infer ----

struct SmcSetup {
  Library library;
  std::shared_ptr<const ObjectModel> table;
  ModelConfig model;
  Schedule schedule;
  NoiseGrid noise_grid;
  int particles = 1000;
  double resample_threshold = 0.5;
  int n_objects = 1;
  int threads = 0;
};

// shared SMC-related keys for infer / pose-benchmark / type-benchmark / ablate
SmcSetup parse_smc_setup(ConfigReader& r, bool want_intrinsics = true) {
  SmcSetup s;
  s.threads = r.get_or<int>("threads", 0);
  s.library = load_library(r.get<std::string>("library"));
  s.table = parse_table(r.object("table"));
  if (want_intrinsics) s.model.intrinsics = parse_intrinsics(r.object("intrinsics"));
  s.model.sigma_max = r.get_or<double>("sigma_max", 0.1);
  parse_window(r, s.model);
  s.model.prefactor = parse_prefactor(r);
  s.schedule = r.has("schedule") ? parse_schedule(r.object("schedule")) : Schedule{};
  s.noise_grid = r.has("noise_grid")
                     ? parse_noise_grid(r.object("noise_grid"), s.model.sigma_max)
                     : default_noise_grid(s.model.sigma_max);
  s.particles = r.get_or<int>("particles", 1000);
  s.resample_threshold = r.get_or<double>("resample_threshold", 0.5);
  s.n_objects = r.get_or<int>("n_objects", 1);
  return s;
}

Json smc_defaults_json() {
  return Json{{"library", ""},
              {"table", {{"width", 0.5}, {"height", 0.5}}},
              {"intrinsics", default_intrinsics_json()},
              {"sigma_max", 0.1},
              {"window", 2},
              {"prefactor", "printed"},
              {"schedule", default_schedule_json()},
              {"noise_grid", default_noise_grid_json(0.1)},
              {"particles", 1000},
              {"resample_threshold", 0.5},
              {"n_objects", 1}};
}

Json particle_to_json(const Particle& p) {
  Json children = Json::array();
  for (const SceneChild& c : p.children) {
    children.push_back({{"object_id", c.object->id},
                        {"face", c.face},
                        {"dx", c.contact.dx},
                        {"dy", c.contact.dy},
                        {"dtheta", c.contact.dtheta}});
  }
  return Json{{"children", children},
              {"noise",
               {{"p_outlier", p.noise.p_outlier},
                {"sigma_noise", p.noise.sigma_noise}}},
              {"log_weight", p.log_weight}};
}

Json summarize_particles(const SmcResult& result, std::size_t library_size,
                         int n_objects) {
  Json summary;
  summary["log_evidence"] = result.log_evidence;
  summary["ess"] = effective_sample_size(result.particles);

  if (n_objects == 1) {
    const std::vector<double> marginal =
        posterior_object_marginal(result.particles, library_size);
    summary["type_marginal"] = marginal;
  }

  const std::vector<double> weights = normalized_weights(result.particles);
  Json fits = Json::array();
  for (int j = 0; j < n_objects; ++j) {
    std::vector<double> angles(result.particles.size());
    for (std::size_t i = 0; i < result.particles.size(); ++i)
      angles[i] = result.particles[i].children[j].contact.dtheta;
    Json fj;
    try {
      const VonMisesFit fit = fit_von_mises(angles, weights);
      fj = Json{{"mu", fit.mu}, {"kappa", fit.kappa}, {"saturated", fit.saturated}};
    } catch (const Error&) {
      fj = Json{{"degenerate", true}};
    }
    fits.push_back(fj);
  }
  summary["von_mises"] = fits;
  summary["map"] = particle_to_json(map_particle(result.particles));
  return summary;
}

Json default_infer_config() {
  Json j = smc_defaults_json();
  j["seed"] = 0;
  j["threads"] = 0;
  j["observation"] = "";
  j["camera"] = nullptr;
  j["base_scene"] = nullptr;
  j["output_particles"] = "";
  j["output_summary"] = "";
  return j;
}

void cmd_infer(const Json& config) {
  ConfigReader r(config, "infer");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  SmcSetup s = parse_smc_setup(r);
  const std::string obs_path = r.get<std::string>("observation");
  DepthImage obs = load_depth_image(obs_path);
  const Pose camera = parse_pose_or_path(r.raw("camera"), fs::current_path());
  const std::vector<SceneChild> base_children =
      base_children_from_config(r, s.library, fs::current_path());
  const std::string output_particles = r.get_or<std::string>("output_particles", "");
  const std::string output_summary = r.get_or<std::string>("output_summary", "");
  r.finish();

  const InferenceContext ctx = make_inference_context(
      std::move(obs), camera, s.library, s.table, s.model, s.schedule, s.noise_grid,
      base_children, s.threads);
  const SmcResult result = run_smc(ctx, s.n_objects, s.particles,
                                   s.resample_threshold, Rng(seed));

  if (!output_particles.empty()) {
    std::string lines;
    for (const Particle& p : result.particles) {
      lines += particle_to_json(p).dump();
      lines += '\n';
    }
    write_file_atomic(output_particles, lines);
  }
  if (!output_summary.empty()) {
    save_json_file(summarize_particles(result, s.library.size(), s.n_objects),
                   output_summary);
  }
}

// ---- track ----

TrackSearch parse_track_search(ConfigReader r) {
  TrackSearch search;
  search.pos_extent = r.get_or<double>("pos_extent", 0.03);
  search.angle_extent = r.get_or<double>("angle_extent_deg", 10.0) * kPi / 180.0;
  search.points_per_dim = r.get_or<int>("points_per_dim", 5);
  search.refine_stages = r.get_or<int>("refine_stages", 2);
  search.refine_factor = r.get_or<double>("refine_factor", 3.0);
  search.beam_width = r.get_or<int>("beam_width", 1);
  r.finish();
  search.validate();
  return search;
}

Json default_track_search_json() {
  return Json{{"pos_extent", 0.03},  {"angle_extent_deg", 10.0},
              {"points_per_dim", 5}, {"refine_stages", 2},
              {"refine_factor", 3.0}, {"beam_width", 1}};
}

Json default_track_config() {
  return Json{{"seed", 0},
              {"threads", 0},
              {"frames", Json::array()},
              {"frames_dir", ""},
              {"scene", ""},
              {"library", ""},
              {"intrinsics", default_intrinsics_json()},
              {"initial_pose", nullptr},
              {"gt_poses", ""},
              {"noise", {{"p_outlier", 0.05}, {"sigma_noise", 0.005}}},
              {"sigma_max", 0.1},
              {"window", 2},
              {"search", default_track_search_json()},
              {"timing", "real"},
              {"output_csv", ""}};
}

bool parse_timing(ConfigReader& r) {
  const std::string timing = r.get_or<std::string>("timing", "real");
  require(timing == "real" || timing == "none", ErrorCode::config,
          "timing must be 'real' or 'none'");
  return timing == "real";
}

void cmd_track(const Json& config) {
  ConfigReader r(config, "track");
  r.get_or<std::uint64_t>("seed", 0);
  const int threads = r.get_or<int>("threads", 0);
  const Library library = load_library(r.get<std::string>("library"));
  const SceneGraph scene =
      scene_from_json(load_json_file(r.get<std::string>("scene")), library);
  ModelConfig model;
  model.intrinsics = parse_intrinsics(r.object("intrinsics"));
  model.sigma_max = r.get_or<double>("sigma_max", 0.1);
  parse_window(r, model);
  const NoiseParams noise = parse_noise(r.object("noise"));
  const Pose initial = parse_pose_or_path(r.raw("initial_pose"), fs::current_path());
  const std::vector<Pose> gt = parse_pose_list(r.raw("gt_poses"), fs::current_path());
  const TrackSearch search = parse_track_search(r.object("search"));
  const bool real_timing = parse_timing(r);
  const std::string output_csv = r.get<std::string>("output_csv");

  std::vector<std::string> frame_paths = r.get_or<std::vector<std::string>>(
      "frames", std::vector<std::string>{});
  const std::string frames_dir = r.get_or<std::string>("frames_dir", "");
  r.finish();

  if (frame_paths.empty()) {
    require(!frames_dir.empty(), ErrorCode::config,
            "track: give either 'frames' or 'frames_dir'");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      frame_paths.push_back(
          (fs::path(frames_dir) / ("frame_" + format_index(static_cast<int>(i)) + ".sdpt"))
              .string());
    }
  }
  require(frame_paths.size() == gt.size(), ErrorCode::config,
          "track: frame count does not match ground-truth pose count");

  std::vector<DepthImage> frames;
  for (const std::string& p : frame_paths) frames.push_back(load_depth_image(p));

  const TrackState state =
      track_camera(frames, scene, model, initial, search, noise, threads);

  CsvWriter csv({"frame_index", "position_error_cm", "orientation_error_deg",
                 "frame_ms"});
  for (std::size_t i = 0; i < state.poses.size(); ++i) {
    const PoseError err = pose_error(state.poses[i], gt[i]);
    csv.field(static_cast<int>(i))
        .field(err.position_cm)
        .field(err.orientation_deg)
        .field(real_timing ? state.frame_ms[i] : 0.0);
    csv.end_row();
  }
  csv.save(output_csv);
}

// ---- bench-tracking ----

Json default_bench_tracking_config() {
  return Json{{"seed", 0},
              {"threads", 0},
              {"library", ""},
              {"resolutions", {25, 50, 100, 200}},
              {"frames", 120},
              {"fov_deg", 60.0},
              {"near", 0.1},
              {"far", 5.0},
              {"orbit",
               {{"distance", 0.9},
                {"altitude_deg", 40.0},
                {"sweep_deg", 360.0},
                {"table", {{"width", 0.5}, {"height", 0.5}}}}},
              {"noise", {{"p_outlier", 0.02}, {"sigma_noise", 0.002}}},
              {"sigma_max", 0.1},
              {"search", default_track_search_json()},
              {"timing", "real"},
              {"output_csv", ""}};
}

CameraIntrinsics square_intrinsics(int res, double fov_deg, double near, double far) {
  CameraIntrinsics k;
  k.width = k.height = static_cast<std::uint32_t>(res);
  k.fx = k.fy = res / (2.0 * std::tan(fov_deg * kPi / 360.0));
  k.cx = k.cy = (res - 1) / 2.0;
  k.near = near;
  k.far = far;
  k.validate();
  return k;
}

void cmd_bench_tracking(const Json& config) {
  ConfigReader r(config, "bench-tracking");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  const int threads = r.get_or<int>("threads", 0);
  const Library library = load_library(r.get<std::string>("library"));
  const auto resolutions = r.get<std::vector<int>>("resolutions");
  const int n_frames = r.get_or<int>("frames", 120);
  const double fov_deg = r.get_or<double>("fov_deg", 60.0);
  const double near = r.get_or<double>("near", 0.1);
  const double far = r.get_or<double>("far", 5.0);

  ConfigReader orbit_r = r.object("orbit");
  OrbitParams orbit;
  orbit.distance = orbit_r.get_or<double>("distance", 0.9);
  orbit.altitude = orbit_r.get_or<double>("altitude_deg", 40.0) * kPi / 180.0;
  orbit.sweep = orbit_r.get_or<double>("sweep_deg", 360.0) * kPi / 180.0;
  if (orbit_r.has("table")) {
    ConfigReader tr = orbit_r.object("table");
    orbit.table_width = tr.get<double>("width");
    orbit.table_height = tr.get<double>("height");
    tr.finish();
  }
  orbit_r.finish();

  const NoiseParams noise = parse_noise(r.object("noise"));
  const double sigma_max = r.get_or<double>("sigma_max", 0.1);
  const TrackSearch search = parse_track_search(r.object("search"));
  const bool real_timing = parse_timing(r);
  const std::string output_csv = r.get<std::string>("output_csv");
  r.finish();

  CsvWriter csv({"object_id", "resolution", "fps", "mean_position_error_cm",
                 "mean_orientation_error_deg"});
  const Rng root(seed);

  for (std::size_t obj = 0; obj < library.size(); ++obj) {
    for (int res : resolutions) {
      ModelConfig model;
      model.intrinsics = square_intrinsics(res, fov_deg, near, far);
      model.sigma_max = sigma_max;
      model.windowed = true;
      model.window = default_window(model.intrinsics.width);

      Rng rng = root.split(obj, static_cast<std::uint64_t>(res));
      const OrbitSequence seq =
          generate_orbit_sequence(library[obj], model, n_frames, orbit, noise, rng);
      const TrackState state = track_camera(seq.frames, seq.scene, model,
                                            seq.camera_poses[0], search, noise, threads);

      double pos_sum = 0, rot_sum = 0, ms_sum = 0;
      for (std::size_t i = 0; i < state.poses.size(); ++i) {
        const PoseError err = pose_error(state.poses[i], seq.camera_poses[i]);
        pos_sum += err.position_cm;
        rot_sum += err.orientation_deg;
        ms_sum += state.frame_ms[i];
      }
      const double n = static_cast<double>(state.poses.size());
      csv.field(static_cast<int>(obj))
          .field(res)
          .field(real_timing ? n / (ms_sum / 1000.0) : 0.0)
          .field(pos_sum / n)
          .field(rot_sum / n);
      csv.end_row();
    }
  }
  csv.save(output_csv);
}

// ---- pose-benchmark ----

Json default_pose_benchmark_config() {
  Json j = smc_defaults_json();
  j.erase("n_objects");
  j["seed"] = 0;
  j["threads"] = 0;
  j["dataset"] = "";
  j["grid_resolution_deg"] = 1.0;
  j["output_csv"] = "";
  return j;
}

void cmd_pose_benchmark(const Json& config) {
  ConfigReader r(config, "pose-benchmark");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  SmcSetup s = parse_smc_setup(r);
  const std::string dataset = r.get<std::string>("dataset");
  const double grid_res_deg = r.get_or<double>("grid_resolution_deg", 1.0);
  const std::string output_csv = r.get<std::string>("output_csv");
  r.finish();
  require(s.n_objects == 1, ErrorCode::config,
          "pose-benchmark: expects single-object scenes");

  const std::vector<DatasetItem> items = load_dataset(dataset, s.library);
  CsvWriter csv({"index", "gt_object_id", "gt_dtheta", "vm_mu", "vm_kappa",
                 "vm_saturated", "cross_entropy", "log_evidence",
                 "map_position_error_cm", "map_orientation_error_deg"});

  const int n_grid = static_cast<int>(std::lround(360.0 / grid_res_deg));
  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    const DatasetItem& item = items[idx];
    require(item.scene.children.size() == 1, ErrorCode::config,
            "pose-benchmark: dataset scenes must have one object");
    const SceneChild& gt = item.scene.children[0];

    const InferenceContext ctx = make_inference_context(
        item.observation, item.camera, s.library, s.table, s.model, s.schedule,
        s.noise_grid, {}, s.threads);
    const SmcResult result =
        run_smc(ctx, 1, s.particles, s.resample_threshold,
                Rng(seed).split(0x90, static_cast<std::uint64_t>(idx)));

    // dense grid posterior over dtheta with everything else at ground truth,
    // noise marginalized over the grid (the "true posterior" oracle)
    std::vector<double> grid_logp(n_grid);
    for (int g = 0; g < n_grid; ++g) {
      const double theta = kTwoPi * g / n_grid;
      SceneChild cand = gt;
      cand.contact.dtheta = theta;
      const std::vector<double> per_noise =
          scene_target_logpdf_multi(ctx, {cand}, ctx.noise_grid.entries);
      double m = -INFINITY;
      for (double v : per_noise) m = std::max(m, v);
      double acc = 0;
      for (double v : per_noise) acc += std::exp(v - m);
      grid_logp[g] = std::isfinite(m) ? m + std::log(acc) : -INFINITY;
    }
    double m = -INFINITY;
    for (double v : grid_logp) m = std::max(m, v);
    double total = 0;
    for (double v : grid_logp) total += std::exp(v - m);
    std::vector<double> grid_post(n_grid);
    for (int g = 0; g < n_grid; ++g) grid_post[g] = std::exp(grid_logp[g] - m) / total;

    const std::vector<double> weights = normalized_weights(result.particles);
    std::vector<double> angles(result.particles.size());
    for (std::size_t i = 0; i < result.particles.size(); ++i)
      angles[i] = result.particles[i].children[0].contact.dtheta;

    double vm_mu = 0, vm_kappa = 0, cross_entropy = 0;
    bool saturated = false;
    try {
      const VonMisesFit fit = fit_von_mises(angles, weights);
      vm_mu = fit.mu;
      vm_kappa = fit.kappa;
      saturated = fit.saturated;
      for (int g = 0; g < n_grid; ++g) {
        const double theta = kTwoPi * g / n_grid;
        cross_entropy -= grid_post[g] * von_mises_logpdf(theta, fit.mu, fit.kappa);
      }
    } catch (const Error&) {
      saturated = true;
      vm_kappa = kVonMisesKappaMax;
      cross_entropy = INFINITY;
    }

    const Particle& map = map_particle(result.particles);
    const Pose map_pose = contact_to_pose(*s.table, *map.children[0].object,
                                          map.children[0].face, map.children[0].contact);
    const Pose gt_pose = contact_to_pose(*s.table, *gt.object, gt.face, gt.contact);
    const PoseError err = pose_error(map_pose, gt_pose);

    csv.field(static_cast<int>(idx))
        .field(gt.object->id)
        .field(gt.contact.dtheta)
        .field(vm_mu)
        .field(vm_kappa)
        .field(static_cast<int>(saturated))
        .field(cross_entropy)
        .field(result.log_evidence)
        .field(err.position_cm)
        .field(err.orientation_deg);
    csv.end_row();
  }
  csv.save(output_csv);
}

// ---- type-benchmark ----

Json default_type_benchmark_config() {
  Json j = smc_defaults_json();
  j["seed"] = 0;
  j["threads"] = 0;
  j["dataset"] = "";
  j["base_scene"] = nullptr;
  j["ood_sigma_pos"] = 0.0;
  j["ood_sigma_rot_deg"] = 0.0;
  j["output_csv"] = "";
  return j;
}

void cmd_type_benchmark(const Json& config) {
  ConfigReader r(config, "type-benchmark");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  SmcSetup s = parse_smc_setup(r);
  const std::string dataset = r.get<std::string>("dataset");
  const std::vector<SceneChild> base_children =
      base_children_from_config(r, s.library, fs::current_path());
  const double ood_sigma_pos = r.get_or<double>("ood_sigma_pos", 0.0);
  const double ood_sigma_rot =
      r.get_or<double>("ood_sigma_rot_deg", 0.0) * kPi / 180.0;
  const std::string output_csv = r.get<std::string>("output_csv");
  r.finish();

  const std::vector<DatasetItem> items = load_dataset(dataset, s.library);
  const bool with_ood = ood_sigma_pos > 0 || ood_sigma_rot > 0;

  std::vector<std::string> header{"split", "index", "gt_object_id"};
  for (std::size_t i = 0; i < s.library.size(); ++i)
    header.push_back("prob_" + std::to_string(i));
  header.push_back("correct_prob");
  header.push_back("argmax_correct");
  CsvWriter csv(header);

  auto run_item = [&](const std::string& split, std::size_t idx,
                      const DepthImage& obs, const Pose& camera, int gt_id) {
    const InferenceContext ctx =
        make_inference_context(obs, camera, s.library, s.table, s.model, s.schedule,
                               s.noise_grid, base_children, s.threads);
    const SmcResult result =
        run_smc(ctx, 1, s.particles, s.resample_threshold,
                Rng(seed).split(split == "ood" ? 0x0dUL : 0x1dUL,
                                static_cast<std::uint64_t>(idx)));
    const std::vector<double> marginal =
        posterior_object_marginal(result.particles, s.library.size());
    const std::size_t argmax =
        std::max_element(marginal.begin(), marginal.end()) - marginal.begin();
    csv.field(split).field(static_cast<int>(idx)).field(gt_id);
    for (double p : marginal) csv.field(p);
    csv.field(marginal[gt_id]).field(static_cast<int>(argmax == static_cast<std::size_t>(gt_id)));
    csv.end_row();
  };

  for (std::size_t idx = 0; idx < items.size(); ++idx) {
    const DatasetItem& item = items[idx];
    require(item.scene.children.size() == 1, ErrorCode::config,
            "type-benchmark: dataset scenes must have one object");
    run_item("in", idx, item.observation, item.camera,
             item.scene.children[0].object->id);
  }

  if (with_ood) {
    const Rng root(seed);
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
      const DatasetItem& item = items[idx];
      const SceneChild& gt = item.scene.children[0];
      Rng rng = root.split(0x0dd, static_cast<std::uint64_t>(idx));

      // perturb the ground-truth pose off the contact manifold
      Pose pose = contact_to_pose(*s.table, *gt.object, gt.face, gt.contact);
      const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
      const double angle = rng.normal(0.0, ood_sigma_rot);
      pose.rotation = (Quat(Eigen::AngleAxisd(angle, axis)) * pose.rotation).normalized();
      pose.translation += Vec3(rng.normal(0.0, ood_sigma_pos),
                               rng.normal(0.0, ood_sigma_pos),
                               rng.normal(0.0, ood_sigma_pos));

      std::vector<MeshInstance> instances{{&s.table->mesh, Pose::identity()}};
      for (const SceneChild& c : base_children)
        instances.push_back(
            {&c.object->mesh, contact_to_pose(*s.table, *c.object, c.face, c.contact)});
      instances.push_back({&gt.object->mesh, pose});
      const DepthImage rendered =
          render_instances(instances, item.camera, s.model.intrinsics);
      const DepthImage observed =
          sample_observation(rendered, s.model.intrinsics, item.noise, rng);
      run_item("ood", idx, observed, item.camera, gt.object->id);
    }
  }
  csv.save(output_csv);
}

// ---- ablate ----

Json default_ablate_config() {
  Json j = smc_defaults_json();
  j["seed"] = 0;
  j["threads"] = 0;
  j["dataset"] = "";
  j["clamped"] = Json::array({Json{{"p_outlier", 0.05}, {"sigma_noise", 0.002}}});
  j["output_csv"] = "";
  return j;
}

void cmd_ablate(const Json& config) {
  ConfigReader r(config, "ablate");
  const auto seed = r.get_or<std::uint64_t>("seed", 0);
  SmcSetup s = parse_smc_setup(r);
  const std::string dataset = r.get<std::string>("dataset");
  const Json& clamped = r.raw("clamped");
  require(clamped.is_array(), ErrorCode::config, "ablate: 'clamped' must be an array");
  const std::string output_csv = r.get<std::string>("output_csv");
  r.finish();

  const std::vector<DatasetItem> items = load_dataset(dataset, s.library);
  const std::size_t n_types = s.library.size();

  struct ModelSpec {
    std::string name;
    NoiseGrid grid;
  };
  std::vector<ModelSpec> specs;
  specs.push_back({"hierarchical", s.noise_grid});
  for (const Json& cj : clamped) {
    const NoiseParams np = parse_noise(ConfigReader(cj, "ablate.clamped[]"));
    specs.push_back({"clamped_" + format_double(np.sigma_noise), NoiseGrid{{np}}});
  }

  CsvWriter csv({"model", "true_object", "inferred_object", "mean_probability"});
  for (const ModelSpec& spec : specs) {
    std::vector<std::vector<double>> confusion(n_types,
                                               std::vector<double>(n_types, 0.0));
    std::vector<int> counts(n_types, 0);
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
      const DatasetItem& item = items[idx];
      require(item.scene.children.size() == 1, ErrorCode::config,
              "ablate: dataset scenes must have one object");
      const int gt_id = item.scene.children[0].object->id;
      const InferenceContext ctx = make_inference_context(
          item.observation, item.camera, s.library, s.table, s.model, s.schedule,
          spec.grid, {}, s.threads);
      const SmcResult result =
          run_smc(ctx, 1, s.particles, s.resample_threshold,
                  Rng(seed).split(0xab, static_cast<std::uint64_t>(idx)));
      const std::vector<double> marginal =
          posterior_object_marginal(result.particles, n_types);
      for (std::size_t j = 0; j < n_types; ++j) confusion[gt_id][j] += marginal[j];
      counts[gt_id] += 1;
    }
    for (std::size_t i = 0; i < n_types; ++i) {
      for (std::size_t j = 0; j < n_types; ++j) {
        const double mean = counts[i] ? confusion[i][j] / counts[i] : 0.0;
        csv.field(spec.name)
            .field(static_cast<int>(i))
            .field(static_cast<int>(j))
            .field(mean);
        csv.end_row();
      }
    }
  }
  csv.save(output_csv);
}

}  // namespace

std::vector<std::string> command_names() {
  return {"learn",         "generate",       "infer",        "track",
          "bench-tracking", "pose-benchmark", "type-benchmark", "ablate"};
}

Json default_command_config(const std::string& command) {
  if (command == "learn") return default_learn_config();
  if (command == "generate") return default_generate_config();
  if (command == "infer") return default_infer_config();
  if (command == "track") return default_track_config();
  if (command == "bench-tracking") return default_bench_tracking_config();
  if (command == "pose-benchmark") return default_pose_benchmark_config();
  if (command == "type-benchmark") return default_type_benchmark_config();
  if (command == "ablate") return default_ablate_config();
  fail(ErrorCode::config, "unknown command: " + command);
}

void run_command(const std::string& command, const Json& config) {
  if (command == "learn") return cmd_learn(config);
  if (command == "generate") return cmd_generate(config);
  if (command == "infer") return cmd_infer(config);
  if (command == "track") return cmd_track(config);
  if (command == "bench-tracking") return cmd_bench_tracking(config);
  if (command == "pose-benchmark") return cmd_pose_benchmark(config);
  if (command == "type-benchmark") return cmd_type_benchmark(config);
  if (command == "ablate") return cmd_ablate(config);
  fail(ErrorCode::config, "unknown command: " + command);
}

Json merge_config(Json base, const Json& overrides) {
  require(base.is_object() && overrides.is_object(), ErrorCode::config,
          "configs must be JSON objects");
  for (auto it = overrides.begin(); it != overrides.end(); ++it)
    base[it.key()] = it.value();
  return base;
}

}  // namespace b3d
