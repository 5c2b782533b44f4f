/*
 * b3d - probabilistic 3D scene perception from depth images.
 *
 * C API over the core engine: opaque handles, integer status codes, and a
 * per-thread error message. All functions returning b3d_status set the error
 * message retrievable via b3d_last_error() on failure. Handles are created
 * by b3d_*_create/load functions and released with the matching _destroy.
 */

#ifndef B3D_H
#define B3D_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define B3D_API __declspec(dllexport)
#else
#define B3D_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum b3d_status {
  B3D_OK = 0,
  B3D_ERROR = 1,          /* invalid argument / precondition violation */
  B3D_ERROR_CONFIG = 2,   /* malformed or rejected configuration */
  B3D_ERROR_IO = 3,       /* filesystem or file-format failure */
  B3D_ERROR_NUMERIC = 4   /* numerical failure */
} b3d_status;

B3D_API const char* b3d_version(void);

/* Message for the most recent failure on the calling thread. */
B3D_API const char* b3d_last_error(void);

typedef struct b3d_depth_image b3d_depth_image;
typedef struct b3d_object_model b3d_object_model;
typedef struct b3d_library b3d_library;
typedef struct b3d_scene b3d_scene;
typedef struct b3d_particles b3d_particles;

typedef struct b3d_intrinsics {
  double fx, fy, cx, cy;
  uint32_t width, height;
  double near_m, far_m;
} b3d_intrinsics;

/* Unit quaternion (w, x, y, z) plus translation, meters. */
typedef struct b3d_pose {
  double qw, qx, qy, qz;
  double tx, ty, tz;
} b3d_pose;

/* ---- depth images (SDPT format on disk) ---- */

B3D_API b3d_status b3d_depth_image_create(uint32_t width, uint32_t height,
                                          const float* depth,
                                          b3d_depth_image** out);
B3D_API b3d_status b3d_depth_image_load(const char* path, b3d_depth_image** out);
B3D_API b3d_status b3d_depth_image_save(const b3d_depth_image* img,
                                        const char* path);
B3D_API uint32_t b3d_depth_image_width(const b3d_depth_image* img);
B3D_API uint32_t b3d_depth_image_height(const b3d_depth_image* img);
B3D_API const float* b3d_depth_image_data(const b3d_depth_image* img);
B3D_API void b3d_depth_image_destroy(b3d_depth_image* img);

/* ---- object models (SVOX format on disk) ---- */

B3D_API b3d_status b3d_model_load(const char* path, int id, b3d_object_model** out);
B3D_API b3d_status b3d_model_save(const b3d_object_model* model, const char* path);

/* Few-shot acquisition: fuse posed depth frames, crop to the axis-aligned
 * box, voxelize at `resolution`. */
B3D_API b3d_status b3d_learn_object(const b3d_depth_image* const* frames,
                                    const b3d_pose* camera_poses, size_t n_frames,
                                    const b3d_intrinsics* k,
                                    const double crop_min[3],
                                    const double crop_max[3], double resolution,
                                    int id, b3d_object_model** out);

B3D_API b3d_status b3d_model_bbox(const b3d_object_model* model, double extents[3]);
B3D_API b3d_status b3d_model_resolution(const b3d_object_model* model, double* out);
B3D_API b3d_status b3d_model_voxel_count(const b3d_object_model* model, size_t* out);
B3D_API void b3d_model_destroy(b3d_object_model* model);

/* ---- libraries ---- */

B3D_API b3d_status b3d_library_open(const char* manifest_path, b3d_library** out);
B3D_API size_t b3d_library_size(const b3d_library* lib);
B3D_API void b3d_library_destroy(b3d_library* lib);

/* ---- scenes ---- */

/* Scene config JSON: {"table": {"width", "height"}, "children":
 * [{"object_id", "face", "dx", "dy", "dtheta"}]}. */
B3D_API b3d_status b3d_scene_from_json(const char* json, const b3d_library* lib,
                                       b3d_scene** out);
B3D_API b3d_status b3d_scene_to_json(const b3d_scene* scene, char** out_json);
B3D_API void b3d_scene_destroy(b3d_scene* scene);
B3D_API void b3d_string_free(char* s);

/* ---- rendering and likelihood ---- */

B3D_API b3d_status b3d_render(const b3d_scene* scene, const b3d_pose* camera,
                              const b3d_intrinsics* k, b3d_depth_image** out);

/* Windowed depth likelihood; window < 0 selects the untruncated form. */
B3D_API b3d_status b3d_log_likelihood(const b3d_depth_image* observed,
                                      const b3d_depth_image* rendered,
                                      const b3d_intrinsics* k, double p_outlier,
                                      double sigma_noise, double sigma_max,
                                      int window, double* out);

/* ---- inference ---- */

/* config_json: same schema as the `infer` command minus file-path keys
 * (see b3d_command_default_config("infer")); pass "{}" for defaults. */
B3D_API b3d_status b3d_infer(const b3d_depth_image* observed,
                             const b3d_pose* camera, const b3d_library* lib,
                             const char* config_json, uint64_t seed,
                             b3d_particles** out);
B3D_API size_t b3d_particles_count(const b3d_particles* p);
B3D_API b3d_status b3d_particles_log_evidence(const b3d_particles* p, double* out);
/* One JSON object per line: children, noise, log_weight. */
B3D_API b3d_status b3d_particles_to_jsonl(const b3d_particles* p, char** out);
/* Posterior probability per library object (single-object runs). */
B3D_API b3d_status b3d_particles_type_marginal(const b3d_particles* p,
                                               double* probs, size_t capacity);
/* World pose of child `index` of the particle maximizing the target. */
B3D_API b3d_status b3d_particles_map_pose(const b3d_particles* p, size_t index,
                                          b3d_pose* out);
B3D_API void b3d_particles_destroy(b3d_particles* p);

/* ---- command driver (the CLI surface) ----
 *
 * Commands: learn, generate, infer, track, bench-tracking, pose-benchmark,
 * type-benchmark, ablate. config_json is the full command configuration;
 * overrides_json (may be NULL) is shallow-merged on top.
 */
B3D_API b3d_status b3d_command_run(const char* command, const char* config_json,
                                   const char* overrides_json);
B3D_API b3d_status b3d_command_default_config(const char* command, char** out_json);
B3D_API b3d_status b3d_command_list(char** out_json); /* JSON array of names */

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* B3D_H */
