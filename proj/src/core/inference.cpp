#include "core/inference.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/parallel.hpp"

namespace b3d {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return kNegInf;
  double acc = 0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

// log prior density of one latent child given its (object, face) support
double child_prior_logpdf(const ObjectModel& table, const SceneChild& child,
                          std::size_t library_size) {
  const Eigen::Vector2d fp = footprint(*child.object, child.face);
  const double dx_range = table.extents().x() - fp.x();
  const double dy_range = table.extents().y() - fp.y();
  if (dx_range <= 0 || dy_range <= 0) return kNegInf;
  const ContactParams& cp = child.contact;
  if (cp.dx < 0 || cp.dx > dx_range || cp.dy < 0 || cp.dy > dy_range ||
      cp.dtheta < 0 || cp.dtheta >= kTwoPi)
    return kNegInf;
  return -std::log(static_cast<double>(library_size)) - std::log(6.0) -
         std::log(dx_range) - std::log(dy_range) - std::log(kTwoPi);
}

double observation_loglik_cached(const InferenceContext& ctx,
                                 const DepthImage& rendered,
                                 const NoiseParams& noise) {
  if (noise.p_outlier < 0 || noise.p_outlier > 1) return kNegInf;
  if (noise.sigma_noise <= 0 || noise.sigma_noise > ctx.model.sigma_max)
    return kNegInf;
  if (ctx.model.windowed) {
    return windowed_log_likelihood_multi(ctx.obs_cache, rendered, ctx.model.intrinsics,
                                         {noise}, ctx.volume, ctx.model.sigma_max,
                                         ctx.model.window, ctx.model.prefactor)[0];
  }
  PointCloud obs_cloud;
  obs_cloud.points = ctx.obs_cache.points;
  const PointCloud rend_cloud = depth_to_cloud(rendered, ctx.model.intrinsics);
  if (rend_cloud.points.empty()) return kNegInf;
  return full_log_likelihood(obs_cloud, rend_cloud, noise, ctx.volume,
                             ctx.model.sigma_max, ctx.model.prefactor);
}

std::vector<double> observation_loglik_cached_multi(
    const InferenceContext& ctx, const DepthImage& rendered,
    const std::vector<NoiseParams>& noise) {
  std::vector<double> out;
  out.reserve(noise.size());
  if (ctx.model.windowed) {
    bool all_valid = true;
    for (const NoiseParams& np : noise) {
      if (np.p_outlier < 0 || np.p_outlier > 1 || np.sigma_noise <= 0 ||
          np.sigma_noise > ctx.model.sigma_max) {
        all_valid = false;
        break;
      }
    }
    if (all_valid) {
      return windowed_log_likelihood_multi(ctx.obs_cache, rendered,
                                           ctx.model.intrinsics, noise, ctx.volume,
                                           ctx.model.sigma_max, ctx.model.window,
                                           ctx.model.prefactor);
    }
  }
  for (const NoiseParams& np : noise)
    out.push_back(observation_loglik_cached(ctx, rendered, np));
  return out;
}

double prior_sum(const InferenceContext& ctx,
                 const std::vector<SceneChild>& children) {
  double total = 0;
  for (const SceneChild& c : children) {
    const double lp = child_prior_logpdf(*ctx.table, c, ctx.library->size());
    if (!std::isfinite(lp)) return kNegInf;
    total += lp;
  }
  return total;
}

Pose child_pose(const InferenceContext& ctx, const SceneChild& child) {
  return contact_to_pose(*ctx.table, *child.object, child.face, child.contact);
}

// rasterize one more child into a copy of the partial-scene render;
// identical to rendering the whole scene in one pass
DepthImage compose_render(const InferenceContext& ctx, const DepthImage& base,
                          const SceneChild& child) {
  DepthImage img = base;
  const Pose world_to_camera = inverse(ctx.camera);
  raster_mesh(img, ctx.model.intrinsics, child.object->mesh,
              compose(world_to_camera, child_pose(ctx, child)));
  return img;
}

}  // namespace

void ScheduleStage::validate() const {
  require(n_dx >= 1 && n_dy >= 1 && n_dtheta >= 1, ErrorCode::invalid,
          "schedule stage: subdivision counts must be >= 1");
}

NoiseGrid default_noise_grid(double sigma_max) {
  NoiseGrid grid;
  for (double p : {0.05, 0.3, 0.8})
    for (double frac : {0.25, 0.5, 1.0})
      grid.entries.push_back({p, frac * sigma_max});
  return grid;
}

SceneChild cell_center_child(const Cell& cell, const Library& library) {
  require(cell.object_id >= 0 &&
              static_cast<std::size_t>(cell.object_id) < library.size(),
          ErrorCode::invalid, "cell object id out of range");
  SceneChild child;
  child.object = library[cell.object_id];
  child.face = cell.face;
  child.contact.dx = cell.dx.center();
  child.contact.dy = cell.dy.center();
  child.contact.dtheta = cell.dtheta.center();
  return child;
}

InferenceContext make_inference_context(DepthImage obs, const Pose& camera,
                                        const Library& library,
                                        std::shared_ptr<const ObjectModel> table,
                                        const ModelConfig& model, Schedule schedule,
                                        NoiseGrid noise_grid,
                                        std::vector<SceneChild> base_children,
                                        int threads) {
  require(!library.empty(), ErrorCode::invalid, "inference: empty library");
  require(!noise_grid.entries.empty(), ErrorCode::invalid,
          "inference: empty noise grid");
  schedule.stage0.validate();
  for (const ScheduleStage& s : schedule.refine) s.validate();
  for (const NoiseParams& np : noise_grid.entries) {
    require(np.p_outlier >= 0 && np.p_outlier <= 1 && np.sigma_noise > 0 &&
                np.sigma_noise <= model.sigma_max,
            ErrorCode::invalid, "noise grid entry outside support");
  }

  InferenceContext ctx;
  ctx.obs_cache = ObservationCache::build(obs, model.intrinsics);
  ctx.obs = std::move(obs);
  ctx.camera = camera;
  ctx.library = &library;
  ctx.table = std::move(table);
  ctx.base_children = std::move(base_children);
  ctx.model = model;
  ctx.schedule = std::move(schedule);
  ctx.noise_grid = std::move(noise_grid);
  ctx.volume = visible_volume(model.intrinsics);
  ctx.threads = threads;
  return ctx;
}

DepthImage render_partial(const InferenceContext& ctx,
                          const std::vector<SceneChild>& children) {
  const CameraIntrinsics& k = ctx.model.intrinsics;
  DepthImage img = DepthImage::constant(k.width, k.height, static_cast<float>(k.far));
  const Pose world_to_camera = inverse(ctx.camera);
  if (ctx.table)
    raster_mesh(img, k, ctx.table->mesh, world_to_camera);
  for (const SceneChild& c : ctx.base_children)
    raster_mesh(img, k, c.object->mesh, compose(world_to_camera, child_pose(ctx, c)));
  for (const SceneChild& c : children)
    raster_mesh(img, k, c.object->mesh, compose(world_to_camera, child_pose(ctx, c)));
  return img;
}

double scene_target_logpdf(const InferenceContext& ctx,
                           const std::vector<SceneChild>& children,
                           const NoiseParams& noise) {
  const double prior = prior_sum(ctx, children);
  if (!std::isfinite(prior)) return kNegInf;
  const DepthImage rendered = render_partial(ctx, children);
  const double lik = observation_loglik_cached(ctx, rendered, noise);
  if (!std::isfinite(lik)) return kNegInf;
  return prior + lik;
}

std::vector<double> scene_target_logpdf_multi(const InferenceContext& ctx,
                                              const std::vector<SceneChild>& children,
                                              const std::vector<NoiseParams>& noise) {
  const double prior = prior_sum(ctx, children);
  if (!std::isfinite(prior)) return std::vector<double>(noise.size(), kNegInf);
  const DepthImage rendered = render_partial(ctx, children);
  std::vector<double> out = observation_loglik_cached_multi(ctx, rendered, noise);
  for (double& v : out) v = std::isfinite(v) ? v + prior : kNegInf;
  return out;
}

std::vector<Cell> stage0_cells(const InferenceContext& ctx) {
  const ScheduleStage& s = ctx.schedule.stage0;
  const double table_w = ctx.table->extents().x();
  const double table_h = ctx.table->extents().y();
  std::vector<Cell> cells;
  for (std::size_t obj = 0; obj < ctx.library->size(); ++obj) {
    for (int face = 1; face <= 6; ++face) {
      const Eigen::Vector2d fp = footprint(*(*ctx.library)[obj], face);
      const double dx_range = table_w - fp.x();
      const double dy_range = table_h - fp.y();
      if (dx_range <= 0 || dy_range <= 0) continue;  // empty support branch
      for (int ix = 0; ix < s.n_dx; ++ix) {
        for (int iy = 0; iy < s.n_dy; ++iy) {
          for (int it = 0; it < s.n_dtheta; ++it) {
            Cell cell;
            cell.object_id = static_cast<int>(obj);
            cell.face = face;
            cell.dx = {dx_range * ix / s.n_dx, dx_range * (ix + 1) / s.n_dx};
            cell.dy = {dy_range * iy / s.n_dy, dy_range * (iy + 1) / s.n_dy};
            cell.dtheta = {kTwoPi * it / s.n_dtheta, kTwoPi * (it + 1) / s.n_dtheta};
            for (std::size_t e = 0; e < ctx.noise_grid.entries.size(); ++e) {
              cell.noise_index = static_cast<int>(e);
              cells.push_back(cell);
            }
          }
        }
      }
    }
  }
  return cells;
}

std::vector<Cell> subdivide_cell(const Cell& cell, const ScheduleStage& stage) {
  stage.validate();
  std::vector<Cell> children;
  children.reserve(static_cast<std::size_t>(stage.n_dx) * stage.n_dy * stage.n_dtheta);
  for (int ix = 0; ix < stage.n_dx; ++ix) {
    for (int iy = 0; iy < stage.n_dy; ++iy) {
      for (int it = 0; it < stage.n_dtheta; ++it) {
        Cell c = cell;
        c.dx = {cell.dx.lo + cell.dx.width() * ix / stage.n_dx,
                cell.dx.lo + cell.dx.width() * (ix + 1) / stage.n_dx};
        c.dy = {cell.dy.lo + cell.dy.width() * iy / stage.n_dy,
                cell.dy.lo + cell.dy.width() * (iy + 1) / stage.n_dy};
        c.dtheta = {cell.dtheta.lo + cell.dtheta.width() * it / stage.n_dtheta,
                    cell.dtheta.lo + cell.dtheta.width() * (it + 1) / stage.n_dtheta};
        children.push_back(c);
      }
    }
  }
  return children;
}

CellScores score_cells(const InferenceContext& ctx, const std::vector<Cell>& cells,
                       const std::vector<SceneChild>& partial,
                       const NoiseParams& default_noise) {
  require(!cells.empty(), ErrorCode::invalid, "score_cells: no cells");

  const double base_prior = prior_sum(ctx, partial);
  const DepthImage base = render_partial(ctx, partial);

  // group runs of cells that share scene latents and differ only in noise,
  // so each group costs one render
  struct Group {
    std::size_t begin, end;  // [begin, end) into cells
  };
  std::vector<Group> groups;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i + 1;
    auto same_scene = [&](const Cell& a, const Cell& b) {
      return a.object_id == b.object_id && a.face == b.face &&
             a.dx.lo == b.dx.lo && a.dx.hi == b.dx.hi && a.dy.lo == b.dy.lo &&
             a.dy.hi == b.dy.hi && a.dtheta.lo == b.dtheta.lo &&
             a.dtheta.hi == b.dtheta.hi;
    };
    while (j < cells.size() && same_scene(cells[i], cells[j])) ++j;
    groups.push_back({i, j});
    i = j;
  }

  std::vector<double> log_targets(cells.size(), kNegInf);
  parallel_for(groups.size(), ctx.threads, [&](std::size_t gi) {
    const Group& g = groups[gi];
    const Cell& lead = cells[g.begin];
    const SceneChild child = cell_center_child(lead, *ctx.library);
    const double child_prior =
        child_prior_logpdf(*ctx.table, child, ctx.library->size());
    if (!std::isfinite(base_prior) || !std::isfinite(child_prior)) return;
    const DepthImage rendered = compose_render(ctx, base, child);

    std::vector<NoiseParams> noise;
    noise.reserve(g.end - g.begin);
    for (std::size_t ci = g.begin; ci < g.end; ++ci) {
      noise.push_back(cells[ci].noise_index >= 0
                          ? ctx.noise_grid.entries[cells[ci].noise_index]
                          : default_noise);
    }
    const std::vector<double> liks =
        observation_loglik_cached_multi(ctx, rendered, noise);
    for (std::size_t ci = g.begin; ci < g.end; ++ci) {
      const double lik = liks[ci - g.begin];
      if (std::isfinite(lik))
        log_targets[ci] = base_prior + child_prior + lik;
    }
  });

  CellScores out;
  out.scores.assign(cells.size(), 0.0);
  double max_log = kNegInf;
  for (double lt : log_targets) max_log = std::max(max_log, lt);
  if (!std::isfinite(max_log)) {
    out.all_zero = true;
    std::fill(out.scores.begin(), out.scores.end(), 1.0 / cells.size());
    return out;
  }
  double total = 0;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    out.scores[ci] = std::exp(log_targets[ci] - max_log);
    total += out.scores[ci];
  }
  for (double& sc : out.scores) sc /= total;
  return out;
}

Stage0Table build_stage0(const InferenceContext& ctx,
                         const std::vector<SceneChild>& partial) {
  Stage0Table table;
  table.cells = stage0_cells(ctx);
  require(!table.cells.empty(), ErrorCode::numeric,
          "stage 0: empty proposal support (no object fits the table)");
  table.scored = score_cells(ctx, table.cells, partial, ctx.noise_grid.entries[0]);
  return table;
}

namespace {

std::size_t sample_categorical(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;  // guards against rounding at u ~ 1
}

}  // namespace

Proposal coarse_to_fine_propose(const InferenceContext& ctx,
                                const std::vector<SceneChild>& partial, Rng& rng,
                                const Stage0Table* stage0) {
  Stage0Table local;
  if (!stage0) {
    local = build_stage0(ctx, partial);
    stage0 = &local;
  }

  Proposal prop;
  const std::size_t pick0 = sample_categorical(stage0->scored.scores, rng);
  prop.path.push_back(static_cast<int>(pick0));
  prop.log_q = std::log(stage0->scored.scores[pick0]);
  Cell current = stage0->cells[pick0];
  prop.noise_index = current.noise_index;
  prop.noise = ctx.noise_grid.entries[current.noise_index];

  for (const ScheduleStage& stage : ctx.schedule.refine) {
    const std::vector<Cell> cells = subdivide_cell(current, stage);
    if (cells.size() == 1) {
      current = cells[0];
      prop.path.push_back(0);
      continue;
    }
    const CellScores scored = score_cells(ctx, cells, partial, prop.noise);
    const std::size_t pick = sample_categorical(scored.scores, rng);
    prop.path.push_back(static_cast<int>(pick));
    prop.log_q += std::log(scored.scores[pick]);
    current = cells[pick];
  }

  prop.leaf = current;
  prop.child.object = (*ctx.library)[current.object_id];
  prop.child.face = current.face;
  prop.child.contact.dx = rng.uniform(current.dx.lo, current.dx.hi);
  prop.child.contact.dy = rng.uniform(current.dy.lo, current.dy.hi);
  prop.child.contact.dtheta = rng.uniform(current.dtheta.lo, current.dtheta.hi);
  prop.log_q += -std::log(current.volume());
  return prop;
}

std::vector<Particle> smc_init(const InferenceContext& ctx, int n_particles,
                               const Rng& rng) {
  require(n_particles >= 1, ErrorCode::invalid, "smc_init: need at least one particle");
  const Stage0Table stage0 = build_stage0(ctx, {});
  require(!stage0.scored.all_zero, ErrorCode::numeric,
          "smc_init: all-zero scores at stage 0");

  std::vector<Particle> particles(n_particles);
  parallel_for(static_cast<std::size_t>(n_particles), ctx.threads, [&](std::size_t i) {
    Rng stream = rng.split(1, i);
    // stage-0 scores depend only on the (empty) partial scene, so the table
    // is shared; refinements below are particle-specific
    Proposal prop = coarse_to_fine_propose(ctx, {}, stream, &stage0);
    Particle& p = particles[i];
    p.children.push_back(prop.child);
    p.noise = prop.noise;
    p.noise_index = prop.noise_index;
    p.log_target = scene_target_logpdf(ctx, p.children, p.noise);
    p.log_weight = p.log_target - prop.log_q;
  });
  return particles;
}

void smc_extend(const InferenceContext& ctx, std::vector<Particle>& particles,
                const Rng& rng) {
  require(!particles.empty(), ErrorCode::invalid, "smc_extend: no particles");
  const std::size_t arity = particles.front().children.size();
  for (const Particle& p : particles)
    require(p.children.size() == arity, ErrorCode::invalid,
            "smc_extend: inconsistent particle arity");

  const std::uint64_t stage_key = arity + 1;
  parallel_for(particles.size(), ctx.threads, [&](std::size_t i) {
    Rng stream = rng.split(stage_key, i);
    Particle& p = particles[i];
    Proposal prop = coarse_to_fine_propose(ctx, p.children, stream);
    const double prev_target = p.log_target;
    p.children.push_back(prop.child);
    p.noise = prop.noise;
    p.noise_index = prop.noise_index;
    p.log_target = scene_target_logpdf(ctx, p.children, p.noise);
    p.log_weight += p.log_target - prev_target - prop.log_q;
  });
}

std::vector<double> normalized_weights(const std::vector<Particle>& particles) {
  std::vector<double> logw(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i)
    logw[i] = particles[i].log_weight;
  const double lse = logsumexp(logw);
  require(std::isfinite(lse), ErrorCode::numeric,
          "particle weights are all zero");
  std::vector<double> w(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i)
    w[i] = std::exp(logw[i] - lse);
  return w;
}

double effective_sample_size(const std::vector<Particle>& particles) {
  require(!particles.empty(), ErrorCode::invalid, "ess: no particles");
  const std::vector<double> w = normalized_weights(particles);
  double sum_sq = 0;
  for (double wi : w) sum_sq += wi * wi;
  return 1.0 / sum_sq;
}

std::vector<Particle> resample_systematic(const std::vector<Particle>& particles,
                                          Rng& rng) {
  require(!particles.empty(), ErrorCode::invalid, "resample: no particles");
  const std::vector<double> w = normalized_weights(particles);

  std::vector<double> logw(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i)
    logw[i] = particles[i].log_weight;
  const double log_total = logsumexp(logw);

  const std::size_t n = particles.size();
  const double u = rng.uniform();
  std::vector<Particle> out;
  out.reserve(n);
  double cumulative = 0;
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double position = (static_cast<double>(i) + u) / static_cast<double>(n);
    while (src + 1 < n && cumulative + w[src] <= position) {
      cumulative += w[src];
      ++src;
    }
    out.push_back(particles[src]);
  }
  const double reset = log_total - std::log(static_cast<double>(n));
  for (Particle& p : out) p.log_weight = reset;
  return out;
}

SmcResult run_smc(const InferenceContext& ctx, int n_objects, int n_particles,
                  double resample_threshold, const Rng& rng) {
  require(n_objects >= 1, ErrorCode::invalid, "run_smc: n_objects must be >= 1");
  SmcResult result;
  result.particles = smc_init(ctx, n_particles, rng);
  Rng resample_stream = rng.split(0x5e5a, 0);

  auto maybe_resample = [&](int stage) {
    const double ess = effective_sample_size(result.particles);
    if (ess < resample_threshold * n_particles) {
      Rng stage_stream = resample_stream.split(static_cast<std::uint64_t>(stage));
      result.particles = resample_systematic(result.particles, stage_stream);
    }
  };
  maybe_resample(1);

  for (int k = 2; k <= n_objects; ++k) {
    smc_extend(ctx, result.particles, rng);
    maybe_resample(k);
  }

  std::vector<double> logw(result.particles.size());
  for (std::size_t i = 0; i < result.particles.size(); ++i)
    logw[i] = result.particles[i].log_weight;
  result.log_evidence =
      logsumexp(logw) - std::log(static_cast<double>(n_particles));
  return result;
}

std::vector<double> posterior_object_marginal(const std::vector<Particle>& particles,
                                              std::size_t library_size) {
  require(!particles.empty(), ErrorCode::invalid, "marginal: empty particle set");
  for (const Particle& p : particles)
    require(p.children.size() == 1, ErrorCode::invalid,
            "marginal: expected one-object particles");
  const std::vector<double> w = normalized_weights(particles);
  std::vector<double> marginal(library_size, 0.0);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const int id = particles[i].children[0].object->id;
    require(id >= 0 && static_cast<std::size_t>(id) < library_size,
            ErrorCode::invalid, "marginal: object id out of range");
    marginal[id] += w[i];
  }
  return marginal;
}

const Particle& map_particle(const std::vector<Particle>& particles) {
  require(!particles.empty(), ErrorCode::invalid, "map_particle: empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < particles.size(); ++i)
    if (particles[i].log_target > particles[best].log_target) best = i;
  return particles[best];
}

}  // namespace b3d
