#include "b3d/b3d.h"

#include <cstring>
#include <memory>
#include <string>

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/inference.hpp"
#include "core/io.hpp"
#include "core/learning.hpp"
#include "core/likelihood.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"

using b3d::Json;

namespace {

thread_local std::string g_last_error;

b3d_status to_status(const b3d::Error& e) {
  switch (e.code()) {
    case b3d::ErrorCode::config: return B3D_ERROR_CONFIG;
    case b3d::ErrorCode::io: return B3D_ERROR_IO;
    case b3d::ErrorCode::numeric: return B3D_ERROR_NUMERIC;
    default: return B3D_ERROR;
  }
}

template <typename F>
b3d_status guarded(F&& fn) {
  try {
    fn();
    return B3D_OK;
  } catch (const b3d::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return B3D_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return B3D_ERROR;
  }
}

void check(bool cond, const char* msg) {
  b3d::require(cond, b3d::ErrorCode::invalid, msg);
}

b3d::CameraIntrinsics from_c(const b3d_intrinsics& k) {
  b3d::CameraIntrinsics out;
  out.fx = k.fx;
  out.fy = k.fy;
  out.cx = k.cx;
  out.cy = k.cy;
  out.width = k.width;
  out.height = k.height;
  out.near = k.near_m;
  out.far = k.far_m;
  out.validate();
  return out;
}

b3d::Pose from_c(const b3d_pose& p) {
  b3d::Pose out;
  out.rotation = b3d::Quat(p.qw, p.qx, p.qy, p.qz);
  check(std::abs(out.rotation.norm() - 1.0) < 1e-6,
        "pose rotation must be a unit quaternion");
  out.rotation.normalize();
  out.translation = b3d::Vec3(p.tx, p.ty, p.tz);
  return out;
}

b3d_pose to_c(const b3d::Pose& p) {
  return {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z(),
          p.translation.x(), p.translation.y(), p.translation.z()};
}

char* make_owned_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

}  // namespace

struct b3d_depth_image {
  b3d::DepthImage img;
};

struct b3d_object_model {
  std::shared_ptr<const b3d::ObjectModel> model;
};

struct b3d_library {
  b3d::Library lib;
};

struct b3d_scene {
  b3d::SceneGraph scene;
  b3d::Library lib;  // keeps referenced models alive
};

struct b3d_particles {
  b3d::SmcResult result;
  std::shared_ptr<const b3d::ObjectModel> table;
  size_t library_size = 0;
};

extern "C" {

const char* b3d_version(void) { return "0.1.0"; }

const char* b3d_last_error(void) { return g_last_error.c_str(); }

b3d_status b3d_depth_image_create(uint32_t width, uint32_t height,
                                  const float* depth, b3d_depth_image** out) {
  return guarded([&] {
    check(out && depth && width > 0 && height > 0, "bad arguments");
    auto handle = std::make_unique<b3d_depth_image>();
    handle->img.width = width;
    handle->img.height = height;
    handle->img.depth.assign(depth, depth + static_cast<size_t>(width) * height);
    *out = handle.release();
  });
}

b3d_status b3d_depth_image_load(const char* path, b3d_depth_image** out) {
  return guarded([&] {
    check(out && path, "bad arguments");
    auto handle = std::make_unique<b3d_depth_image>();
    handle->img = b3d::load_depth_image(path);
    *out = handle.release();
  });
}

b3d_status b3d_depth_image_save(const b3d_depth_image* img, const char* path) {
  return guarded([&] {
    check(img && path, "bad arguments");
    b3d::save_depth_image(img->img, path);
  });
}

uint32_t b3d_depth_image_width(const b3d_depth_image* img) {
  return img ? img->img.width : 0;
}

uint32_t b3d_depth_image_height(const b3d_depth_image* img) {
  return img ? img->img.height : 0;
}

const float* b3d_depth_image_data(const b3d_depth_image* img) {
  return img ? img->img.depth.data() : nullptr;
}

void b3d_depth_image_destroy(b3d_depth_image* img) { delete img; }

b3d_status b3d_model_load(const char* path, int id, b3d_object_model** out) {
  return guarded([&] {
    check(out && path, "bad arguments");
    auto handle = std::make_unique<b3d_object_model>();
    handle->model = std::make_shared<b3d::ObjectModel>(
        b3d::ObjectModel::from_grid(id, b3d::load_voxel_grid(path)));
    *out = handle.release();
  });
}

b3d_status b3d_model_save(const b3d_object_model* model, const char* path) {
  return guarded([&] {
    check(model && path, "bad arguments");
    check(!model->model->grid.occupied.empty(), "model has no voxel grid");
    b3d::save_voxel_grid(model->model->grid, path);
  });
}

b3d_status b3d_learn_object(const b3d_depth_image* const* frames,
                            const b3d_pose* camera_poses, size_t n_frames,
                            const b3d_intrinsics* k, const double crop_min[3],
                            const double crop_max[3], double resolution, int id,
                            b3d_object_model** out) {
  return guarded([&] {
    check(frames && camera_poses && k && crop_min && crop_max && out && n_frames > 0,
          "bad arguments");
    std::vector<b3d::DepthImage> imgs;
    std::vector<b3d::Pose> poses;
    for (size_t i = 0; i < n_frames; ++i) {
      check(frames[i] != nullptr, "null frame");
      imgs.push_back(frames[i]->img);
      poses.push_back(from_c(camera_poses[i]));
    }
    auto handle = std::make_unique<b3d_object_model>();
    handle->model = std::make_shared<b3d::ObjectModel>(b3d::learn_object(
        imgs, poses, from_c(*k), b3d::Vec3(crop_min[0], crop_min[1], crop_min[2]),
        b3d::Vec3(crop_max[0], crop_max[1], crop_max[2]), resolution, id));
    *out = handle.release();
  });
}

b3d_status b3d_model_bbox(const b3d_object_model* model, double extents[3]) {
  return guarded([&] {
    check(model && extents, "bad arguments");
    const b3d::Vec3 e = model->model->extents();
    extents[0] = e.x();
    extents[1] = e.y();
    extents[2] = e.z();
  });
}

b3d_status b3d_model_resolution(const b3d_object_model* model, double* out) {
  return guarded([&] {
    check(model && out, "bad arguments");
    *out = model->model->grid.resolution;
  });
}

b3d_status b3d_model_voxel_count(const b3d_object_model* model, size_t* out) {
  return guarded([&] {
    check(model && out, "bad arguments");
    *out = model->model->grid.occupied.size();
  });
}

void b3d_model_destroy(b3d_object_model* model) { delete model; }

b3d_status b3d_library_open(const char* manifest_path, b3d_library** out) {
  return guarded([&] {
    check(out && manifest_path, "bad arguments");
    auto handle = std::make_unique<b3d_library>();
    handle->lib = b3d::load_library(manifest_path);
    *out = handle.release();
  });
}

size_t b3d_library_size(const b3d_library* lib) { return lib ? lib->lib.size() : 0; }

void b3d_library_destroy(b3d_library* lib) { delete lib; }

b3d_status b3d_scene_from_json(const char* json, const b3d_library* lib,
                               b3d_scene** out) {
  return guarded([&] {
    check(json && lib && out, "bad arguments");
    Json j = Json::parse(json, nullptr, false);
    b3d::require(!j.is_discarded(), b3d::ErrorCode::config, "invalid scene JSON");
    auto handle = std::make_unique<b3d_scene>();
    handle->scene = b3d::scene_from_json(j, lib->lib);
    handle->lib = lib->lib;
    *out = handle.release();
  });
}

b3d_status b3d_scene_to_json(const b3d_scene* scene, char** out_json) {
  return guarded([&] {
    check(scene && out_json, "bad arguments");
    *out_json = make_owned_string(b3d::scene_to_json(scene->scene).dump());
  });
}

void b3d_scene_destroy(b3d_scene* scene) { delete scene; }

void b3d_string_free(char* s) { delete[] s; }

b3d_status b3d_render(const b3d_scene* scene, const b3d_pose* camera,
                      const b3d_intrinsics* k, b3d_depth_image** out) {
  return guarded([&] {
    check(scene && camera && k && out, "bad arguments");
    auto handle = std::make_unique<b3d_depth_image>();
    handle->img = b3d::render_depth(scene->scene, from_c(*camera), from_c(*k));
    *out = handle.release();
  });
}

b3d_status b3d_log_likelihood(const b3d_depth_image* observed,
                              const b3d_depth_image* rendered,
                              const b3d_intrinsics* k, double p_outlier,
                              double sigma_noise, double sigma_max, int window,
                              double* out) {
  return guarded([&] {
    check(observed && rendered && k && out, "bad arguments");
    const b3d::CameraIntrinsics intr = from_c(*k);
    const b3d::NoiseParams np{p_outlier, sigma_noise};
    const b3d::SceneVolume vol = b3d::visible_volume(intr);
    if (window >= 0) {
      *out = b3d::windowed_log_likelihood(observed->img, rendered->img, intr, np,
                                          vol, sigma_max, window);
    } else {
      *out = b3d::full_log_likelihood(b3d::depth_to_cloud(observed->img, intr),
                                      b3d::depth_to_cloud(rendered->img, intr), np,
                                      vol, sigma_max);
    }
  });
}

b3d_status b3d_infer(const b3d_depth_image* observed, const b3d_pose* camera,
                     const b3d_library* lib, const char* config_json,
                     uint64_t seed, b3d_particles** out) {
  return guarded([&] {
    check(observed && camera && lib && config_json && out, "bad arguments");
    Json config = Json::parse(config_json, nullptr, false);
    b3d::require(!config.is_discarded(), b3d::ErrorCode::config,
                 "invalid inference config JSON");

    b3d::ConfigReader r(config, "b3d_infer config");
    const int threads = r.get_or<int>("threads", 0);
    b3d::ModelConfig model;
    {
      b3d_intrinsics ik;
      if (r.has("intrinsics")) {
        b3d::ConfigReader ir = r.object("intrinsics");
        ik.fx = ir.get<double>("fx");
        ik.fy = ir.get<double>("fy");
        ik.cx = ir.get<double>("cx");
        ik.cy = ir.get<double>("cy");
        ik.width = ir.get<uint32_t>("width");
        ik.height = ir.get<uint32_t>("height");
        ik.near_m = ir.get<double>("near");
        ik.far_m = ir.get<double>("far");
        ir.finish();
      } else {
        b3d::fail(b3d::ErrorCode::config, "b3d_infer: config requires 'intrinsics'");
      }
      model.intrinsics = from_c(ik);
    }
    model.sigma_max = r.get_or<double>("sigma_max", 0.1);
    const int window = r.get_or<int>("window", 2);
    model.windowed = window >= 0;
    model.window = std::max(window, 0);

    std::shared_ptr<const b3d::ObjectModel> table;
    {
      b3d::ConfigReader tr = r.object("table");
      table = std::make_shared<b3d::ObjectModel>(b3d::ObjectModel::table(
          tr.get<double>("width"), tr.get<double>("height"),
          tr.get_or<double>("thickness", 0.01)));
      tr.finish();
    }

    b3d::Schedule schedule;
    if (r.has("schedule")) {
      b3d::ConfigReader sr = r.object("schedule");
      auto stage = [&](const Json& v) {
        b3d::require(v.is_array() && v.size() == 3, b3d::ErrorCode::config,
                     "schedule stages must be [n_dx, n_dy, n_dtheta]");
        return b3d::ScheduleStage{v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
      };
      schedule.stage0 = stage(sr.raw("stage0"));
      schedule.refine.clear();
      for (const Json& v : sr.raw("refine")) schedule.refine.push_back(stage(v));
      sr.finish();
    }

    b3d::NoiseGrid grid = b3d::default_noise_grid(model.sigma_max);
    if (r.has("noise_grid")) {
      b3d::ConfigReader gr = r.object("noise_grid");
      grid.entries.clear();
      for (const Json& p : gr.raw("p_outlier"))
        for (const Json& sv : gr.raw("sigma"))
          grid.entries.push_back({p.get<double>(), sv.get<double>()});
      gr.finish();
    }

    const int n_objects = r.get_or<int>("n_objects", 1);
    const int particles = r.get_or<int>("particles", 1000);
    const double threshold = r.get_or<double>("resample_threshold", 0.5);
    r.finish();

    const b3d::InferenceContext ctx = b3d::make_inference_context(
        observed->img, from_c(*camera), lib->lib, table, model, schedule, grid, {},
        threads);
    auto handle = std::make_unique<b3d_particles>();
    handle->result = b3d::run_smc(ctx, n_objects, particles, threshold, b3d::Rng(seed));
    handle->table = table;
    handle->library_size = lib->lib.size();
    *out = handle.release();
  });
}

size_t b3d_particles_count(const b3d_particles* p) {
  return p ? p->result.particles.size() : 0;
}

b3d_status b3d_particles_log_evidence(const b3d_particles* p, double* out) {
  return guarded([&] {
    check(p && out, "bad arguments");
    *out = p->result.log_evidence;
  });
}

b3d_status b3d_particles_to_jsonl(const b3d_particles* p, char** out) {
  return guarded([&] {
    check(p && out, "bad arguments");
    std::string lines;
    for (const b3d::Particle& particle : p->result.particles) {
      Json children = Json::array();
      for (const b3d::SceneChild& c : particle.children) {
        children.push_back({{"object_id", c.object->id},
                            {"face", c.face},
                            {"dx", c.contact.dx},
                            {"dy", c.contact.dy},
                            {"dtheta", c.contact.dtheta}});
      }
      lines += Json{{"children", children},
                    {"noise",
                     {{"p_outlier", particle.noise.p_outlier},
                      {"sigma_noise", particle.noise.sigma_noise}}},
                    {"log_weight", particle.log_weight}}
                   .dump();
      lines += '\n';
    }
    *out = make_owned_string(lines);
  });
}

b3d_status b3d_particles_type_marginal(const b3d_particles* p, double* probs,
                                       size_t capacity) {
  return guarded([&] {
    check(p && probs, "bad arguments");
    check(capacity >= p->library_size, "marginal buffer too small");
    const std::vector<double> marginal =
        b3d::posterior_object_marginal(p->result.particles, p->library_size);
    std::copy(marginal.begin(), marginal.end(), probs);
  });
}

b3d_status b3d_particles_map_pose(const b3d_particles* p, size_t index,
                                  b3d_pose* out) {
  return guarded([&] {
    check(p && out, "bad arguments");
    const b3d::Particle& map = b3d::map_particle(p->result.particles);
    check(index < map.children.size(), "child index out of range");
    const b3d::SceneChild& c = map.children[index];
    *out = to_c(b3d::contact_to_pose(*p->table, *c.object, c.face, c.contact));
  });
}

void b3d_particles_destroy(b3d_particles* p) { delete p; }

b3d_status b3d_command_run(const char* command, const char* config_json,
                           const char* overrides_json) {
  return guarded([&] {
    check(command && config_json, "bad arguments");
    Json config = Json::parse(config_json, nullptr, false);
    b3d::require(!config.is_discarded(), b3d::ErrorCode::config,
                 "invalid config JSON");
    if (overrides_json && overrides_json[0] != '\0') {
      Json overrides = Json::parse(overrides_json, nullptr, false);
      b3d::require(!overrides.is_discarded(), b3d::ErrorCode::config,
                   "invalid overrides JSON");
      config = b3d::merge_config(config, overrides);
    }
    b3d::run_command(command, config);
  });
}

b3d_status b3d_command_default_config(const char* command, char** out_json) {
  return guarded([&] {
    check(command && out_json, "bad arguments");
    *out_json = make_owned_string(b3d::default_command_config(command).dump(2));
  });
}

b3d_status b3d_command_list(char** out_json) {
  return guarded([&] {
    check(out_json, "bad arguments");
    *out_json = make_owned_string(Json(b3d::command_names()).dump());
  });
}

}  // extern "C"
