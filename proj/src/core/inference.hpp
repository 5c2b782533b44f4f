#pragma once

#include <memory>
#include <vector>

#include "core/generative.hpp"
#include "core/geometry.hpp"
#include "core/likelihood.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"
#include "core/scene_graph.hpp"

namespace b3d {

struct Interval {
  double lo = 0, hi = 0;
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

// Subdivision counts per continuous latent dimension for one search stage.
// Discrete dimensions (object id, face) and the noise-grid choice are
// enumerated at stage 0 only.
struct ScheduleStage {
  int n_dx = 1, n_dy = 1, n_dtheta = 1;
  void validate() const;
};

struct Schedule {
  ScheduleStage stage0{10, 10, 8};
  std::vector<ScheduleStage> refine{{5, 5, 5}, {5, 5, 5}};
  std::size_t stages() const { return 1 + refine.size(); }
};

// Finite candidate set for the per-object noise parameters. The proposal
// picks an entry jointly with the stage-0 cell; within-cell noise density is
// treated as a point mass in the weights.
struct NoiseGrid {
  std::vector<NoiseParams> entries;
};

NoiseGrid default_noise_grid(double sigma_max);

// One region of the latent support for a new child: a discrete assignment
// plus an interval per continuous dimension.
struct Cell {
  int object_id = 0;
  int face = 1;
  Interval dx, dy, dtheta;
  int noise_index = -1;  // fixed once chosen at stage 0
  double volume() const { return dx.width() * dy.width() * dtheta.width(); }
};

SceneChild cell_center_child(const Cell& cell, const Library& library);

// Everything held fixed during one inference run. The camera pose is known;
// base_children are conditioning scene content (e.g. a known occluder) that
// is rendered but carries no prior term.
struct InferenceContext {
  DepthImage obs;
  ObservationCache obs_cache;
  Pose camera;
  const Library* library = nullptr;
  std::shared_ptr<const ObjectModel> table;
  std::vector<SceneChild> base_children;
  ModelConfig model;
  Schedule schedule;
  NoiseGrid noise_grid;
  SceneVolume volume;
  int threads = 0;
};

InferenceContext make_inference_context(DepthImage obs, const Pose& camera,
                                        const Library& library,
                                        std::shared_ptr<const ObjectModel> table,
                                        const ModelConfig& model, Schedule schedule,
                                        NoiseGrid noise_grid,
                                        std::vector<SceneChild> base_children = {},
                                        int threads = 0);

// Render of table + base children + the given latent children.
DepthImage render_partial(const InferenceContext& ctx,
                          const std::vector<SceneChild>& children);

// Unnormalized SMC target: sum of latent-child prior terms plus the
// observation likelihood under the given noise parameters.
double scene_target_logpdf(const InferenceContext& ctx,
                           const std::vector<SceneChild>& children,
                           const NoiseParams& noise);

// Same target for several noise settings, rendering the scene once.
std::vector<double> scene_target_logpdf_multi(const InferenceContext& ctx,
                                              const std::vector<SceneChild>& children,
                                              const std::vector<NoiseParams>& noise);

// Stage-0 cells: full enumeration of (object, face) with non-empty support,
// a stage0-schedule grid over (dx, dy, dtheta), and every noise-grid entry.
std::vector<Cell> stage0_cells(const InferenceContext& ctx);

// Children of `cell` under the given stage spec; they tile `cell` exactly.
std::vector<Cell> subdivide_cell(const Cell& cell, const ScheduleStage& stage);

struct CellScores {
  std::vector<double> scores;  // positive, sum to 1
  bool all_zero = false;       // every cell had -inf target (scores uniform)
};

// Scores each cell by evaluating the unnormalized target at its center point
// (the render is shared across cells that differ only in noise), then
// exp-normalizes. default_noise applies to cells without a noise index.
CellScores score_cells(const InferenceContext& ctx, const std::vector<Cell>& cells,
                       const std::vector<SceneChild>& partial,
                       const NoiseParams& default_noise);

struct Stage0Table {
  std::vector<Cell> cells;
  CellScores scored;
};

Stage0Table build_stage0(const InferenceContext& ctx,
                         const std::vector<SceneChild>& partial);

struct Proposal {
  SceneChild child;
  NoiseParams noise;
  int noise_index = -1;
  double log_q = 0;            // proposal density at the sampled point
  std::vector<int> path;       // chosen cell index per stage
  Cell leaf;                   // final refined cell
};

// Coarse-to-fine proposal: sample a stage-0 cell proportionally to its
// score, refine through the schedule, then draw uniformly within the final
// cell. log_q sums the stage categorical masses and the final uniform
// density. A precomputed stage-0 table may be shared across particles.
Proposal coarse_to_fine_propose(const InferenceContext& ctx,
                                const std::vector<SceneChild>& partial, Rng& rng,
                                const Stage0Table* stage0 = nullptr);

struct Particle {
  std::vector<SceneChild> children;
  NoiseParams noise;
  int noise_index = -1;
  double log_weight = 0;
  double log_target = 0;  // unnormalized target of the current state
};

// First SMC stage: every particle proposes its first child;
// log_weight = log target - log q.
std::vector<Particle> smc_init(const InferenceContext& ctx, int n_particles,
                               const Rng& rng);

// Adds one child per particle. The new weight multiplies in
// target(extended, new noise) / (target(previous, previous noise) * q).
// Noise parameters are replaced, not augmented.
void smc_extend(const InferenceContext& ctx, std::vector<Particle>& particles,
                const Rng& rng);

// (sum w)^2 / sum w^2 on normalized weights, in [1, P].
double effective_sample_size(const std::vector<Particle>& particles);

// Systematic resampling; offspring counts are within 1 of P * normalized
// weight. All log-weights reset to log(total/P) so the weight sum is
// preserved (which keeps the evidence estimate unbiased).
std::vector<Particle> resample_systematic(const std::vector<Particle>& particles,
                                          Rng& rng);

struct SmcResult {
  std::vector<Particle> particles;
  double log_evidence = 0;  // log of (mean final unnormalized weight)
};

// n-stage SMC: init, then n-1 extends, resampling whenever
// ESS < resample_threshold * P.
SmcResult run_smc(const InferenceContext& ctx, int n_objects, int n_particles,
                  double resample_threshold, const Rng& rng);

// Weight-normalized histogram over the first child's object id.
std::vector<double> posterior_object_marginal(const std::vector<Particle>& particles,
                                              std::size_t library_size);

// Particle maximizing the unnormalized target (joint MAP among particles).
const Particle& map_particle(const std::vector<Particle>& particles);

std::vector<double> normalized_weights(const std::vector<Particle>& particles);

}  // namespace b3d
