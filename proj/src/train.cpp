// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/train.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace anif {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (iterations < 1 || rays_per_batch < 1 || reg_points < 0 || samples_per_ray < 1 ||
      checkpoint_every < 1 || threads < 1)
    throw InvalidArgumentError("train config: sizes must be positive");
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  TrainConfig c;
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  c.iterations = j.value("iterations", c.iterations);
  c.rays_per_batch = j.value("rays_per_batch", c.rays_per_batch);
  c.reg_points = j.value("reg_points", c.reg_points);
  c.seed = j.value("seed", c.seed);
  if (j.contains("profile")) {
    const std::string p = j.at("profile").get<std::string>();
    if (p != "paper" && p != "desk") throw InvalidArgumentError("train config: bad profile " + p);
    c.profile = p == "paper" ? Profile::Paper : Profile::Desk;
  }
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.samples_per_ray = j.value("samples_per_ray", c.samples_per_ray);
  c.threads = j.value("threads", c.threads);
  c.aabb_padding = j.value("aabb_padding", c.aabb_padding);
  c.novel_iterations = j.value("novel_iterations", c.novel_iterations);
  c.validate();
  return c;
}

void TrainConfig::save(const std::string& path) const {
  json j{{"variant", variant_name(variant)},
         {"iterations", iterations},
         {"rays_per_batch", rays_per_batch},
         {"reg_points", reg_points},
         {"seed", seed},
         {"profile", profile == Profile::Paper ? "paper" : "desk"},
         {"checkpoint_every", checkpoint_every},
         {"samples_per_ray", samples_per_ray},
         {"threads", threads},
         {"aabb_padding", aabb_padding},
         {"novel_iterations", novel_iterations}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << "\n";
}

RayBatch sample_ray_batch(const FrameDataset& data, Rng& rng, int batch_size) {
  if (data.frame_count() == 0) throw InvalidArgumentError("sample_ray_batch: empty dataset");
  RayBatch batch;
  batch.frame = rng.uniform_int(data.frame_count());
  batch.gt_rgb.resize(batch_size, 3);
  batch.gt_mask.resize(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const int cam = rng.uniform_int(data.camera_count());
    const Camera& camera = data.cameras[cam];
    int col, row;
    const bool focused = rng.uniform() < 0.8;
    if (focused && !data.mask_rects.empty()) {
      const PixelRect& rect = data.mask_rects[cam][batch.frame];
      col = rect.col0 + rng.uniform_int(rect.width());
      row = rect.row0 + rng.uniform_int(rect.height());
    } else {
      col = rng.uniform_int(camera.width);
      row = rng.uniform_int(camera.height);
    }
    batch.camera.push_back(cam);
    batch.row.push_back(row);
    batch.col.push_back(col);
    batch.rays.push_back(generate_ray(camera, row, col));
    const Image& img = data.images[cam][batch.frame];
    for (int c = 0; c < 3; ++c) batch.gt_rgb(i, c) = img.at(row, col, c);
    batch.gt_mask[i] = data.has_masks() ? data.masks[cam][batch.frame].at(row, col) : 0.0;
  }
  return batch;
}

Mat sample_box_points(const Aabb& box, int n, Rng& rng) {
  if ((box.min.array() > box.max.array()).any())
    throw InvalidArgumentError("sample_box_points: invalid box");
  Mat pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) pts(i, a) = rng.uniform(box.min[a], box.max[a]);
  return pts;
}

Trainer::Trainer(Model& model, const FrameDataset& data, const TrainConfig& config)
    : model_(model), data_(data), cfg_(config) {
  cfg_.validate();
  if (model.config.variant != cfg_.variant)
    throw InvalidArgumentError("trainer: model/config variant mismatch");
  if (cfg_.variant == Variant::SdfPdf && !data.has_masks())
    throw InvalidArgumentError("trainer: sdf-pdf requires dataset masks");
  if (model.config.frames != data.frame_count())
    throw InvalidArgumentError("trainer: model frame count != dataset frames");
  state_.rng = Rng(cfg_.seed);
  contexts_.reserve(data.frame_count());
  for (int f = 0; f < data.frame_count(); ++f)
    contexts_.push_back(
        make_frame_context(model.tmpl, data.poses[f], data.canonical_pose, cfg_.aabb_padding));
}

namespace {

// raw per-term partial sums plus parameter gradients of one chunk
struct ChunkResult {
  double rgb = 0.0, mask = 0.0, eikonal = 0.0, nsf = 0.0, dx = 0.0;
  std::vector<Mat> grads;  // indexed by parameter id, empty = zero

  static ChunkResult combine(ChunkResult a, ChunkResult b) {
    a.rgb += b.rgb;
    a.mask += b.mask;
    a.eikonal += b.eikonal;
    a.nsf += b.nsf;
    a.dx += b.dx;
    if (a.grads.size() < b.grads.size()) a.grads.resize(b.grads.size());
    for (size_t i = 0; i < b.grads.size(); ++i) {
      if (b.grads[i].size() == 0) continue;
      if (a.grads[i].size() == 0)
        a.grads[i] = std::move(b.grads[i]);
      else
        a.grads[i] += b.grads[i];
    }
    return a;
  }
};

void collect_grads(const Graph& g, const ParamStore& params, ChunkResult& out) {
  out.grads.resize(params.size());
  for (int id = 0; id < params.size(); ++id) {
    const Mat* grad = g.param_grad(params.at(id));
    if (grad != nullptr) out.grads[id] = *grad;
  }
}

// norm(relu(residual + w_s)) with near-zero sums clamped; the canonical-side
// field shares this path with psi row 0 of the canonical code.
Var weight_field_at(Graph& g, const Mlp& residual, const Parameter& psi, int row, Var x,
                    const Mat& w_s) {
  return nbw_weight_field(g, residual, psi, row, x, w_s);
}

}  // namespace

LossReport Trainer::train_step(int64_t iter) {
  return train_step(sample_ray_batch(data_, state_.rng, cfg_.rays_per_batch), iter);
}

LossReport Trainer::train_step(const RayBatch& batch, int64_t iter) {
  const FrameContext& ctx = contexts_[batch.frame];
  const int n_rays = batch.size();
  const double rho = rho_schedule(iter);
  const double lr = lr_schedule(iter, cfg_.iterations);
  const Variant variant = cfg_.variant;
  const bool sdf = variant == Variant::SdfPdf;
  const bool nbw = variant == Variant::NerfNbw;
  const bool pdf = variant != Variant::NerfNbw;

  // All randomness is drawn up front in a fixed order; chunk execution below
  // is pure and may run on any thread.
  std::vector<std::optional<RaySamples>> samples(n_rays);
  for (int r = 0; r < n_rays; ++r) {
    auto interval = ray_aabb_bounds(batch.rays[r], ctx.box);
    if (interval)
      samples[r] =
          stratified_samples(interval->near, interval->far, cfg_.samples_per_ray, state_.rng);
  }
  Mat eik_points, nsf_points, dx_points;
  if (sdf) eik_points = sample_box_points(ctx.box, cfg_.reg_points, state_.rng);
  if (nbw) nsf_points = sample_box_points(ctx.box, cfg_.reg_points, state_.rng);
  if (pdf) dx_points = sample_box_points(model_.canonical_box, cfg_.reg_points, state_.rng);

  const int ray_chunks = (n_rays + kChunkRays - 1) / kChunkRays;
  const int point_chunks =
      cfg_.reg_points == 0 ? 0 : (cfg_.reg_points + kChunkPoints - 1) / kChunkPoints;

  struct Task {
    enum Kind { Rays, Eikonal, Nsf, Dx } kind;
    int begin, end;
  };
  std::vector<Task> tasks;
  for (int c = 0; c < ray_chunks; ++c)
    tasks.push_back({Task::Rays, c * kChunkRays, std::min((c + 1) * kChunkRays, n_rays)});
  auto add_point_tasks = [&](Task::Kind kind) {
    for (int c = 0; c < point_chunks; ++c)
      tasks.push_back(
          {kind, c * kChunkPoints, std::min((c + 1) * kChunkPoints, cfg_.reg_points)});
  };
  if (sdf) add_point_tasks(Task::Eikonal);
  if (nbw) add_point_tasks(Task::Nsf);
  if (pdf) add_point_tasks(Task::Dx);

  auto run_task = [&](const Task& task) -> ChunkResult {
    ChunkResult result;
    Graph g;
    std::vector<Var> loss_parts;
    if (task.kind == Task::Rays) {
      RayBundle bundle;
      bundle.offsets->push_back(0);
      int total = 0;
      std::vector<int> hit_to_batch;
      for (int r = task.begin; r < task.end; ++r) {
        bundle.rays.push_back(batch.rays[r]);
        if (samples[r]) {
          bundle.hit.push_back(1);
          bundle.hit_index.push_back(static_cast<int>(hit_to_batch.size()));
          hit_to_batch.push_back(r);
          total += cfg_.samples_per_ray;
          bundle.offsets->push_back(total);
        } else {
          bundle.hit.push_back(0);
          bundle.hit_index.push_back(-1);
          // a miss composites over black with a large min-sdf; both loss
          // terms pick up the constant contribution below
          result.rgb += batch.gt_rgb.row(r).norm();
          if (sdf) result.mask += mask_loss(Vec::Constant(1, kMissMinGeometry),
                                            Vec::Constant(1, batch.gt_mask[r]), rho);
        }
      }
      if (!hit_to_batch.empty()) {
        bundle.points.resize(total, 3);
        bundle.dirs.resize(total, 3);
        bundle.deltas.resize(total);
        int row = 0;
        for (int h = 0; h < static_cast<int>(hit_to_batch.size()); ++h) {
          const int r = hit_to_batch[h];
          const RaySamples& s = *samples[r];
          for (Eigen::Index k = 0; k < s.t.size(); ++k, ++row) {
            bundle.points.row(row) =
                (batch.rays[r].origin + s.t[k] * batch.rays[r].direction).transpose();
            bundle.dirs.row(row) = batch.rays[r].direction.transpose();
            bundle.deltas[row] = s.delta[k];
          }
        }
        BatchRender br = render_batch(g, RenderSetup::of(model_, ctx, batch.frame), bundle);
        Mat gt_hit(hit_to_batch.size(), 3);
        for (size_t h = 0; h < hit_to_batch.size(); ++h)
          gt_hit.row(h) = batch.gt_rgb.row(hit_to_batch[h]);
        Var pred = g.slice_cols(br.pixel, 0, 3);
        Var rgb_sum = g.sum_all(g.row_l2_norm(g.sub(pred, g.constant(gt_hit))));
        result.rgb += g.value(rgb_sum)(0, 0);
        loss_parts.push_back(g.scale(rgb_sum, 1.0 / n_rays));
        if (sdf) {
          Vec mask_hit(hit_to_batch.size());
          for (size_t h = 0; h < hit_to_batch.size(); ++h)
            mask_hit[h] = batch.gt_mask[hit_to_batch[h]];
          Var p = g.clamp(g.sigmoid(g.scale(br.min_geometry, -rho)), kBceClamp, 1.0 - kBceClamp);
          Var bce = g.scale(
              g.add(g.mul(g.log(p), g.constant(Mat(mask_hit))),
                    g.mul(g.log(g.add_scalar(g.scale(p, -1.0), 1.0)),
                          g.constant(Mat((1.0 - mask_hit.array()).matrix())))),
              -1.0);
          Var mask_sum = g.sum_all(bce);
          result.mask += g.value(mask_sum)(0, 0);
          loss_parts.push_back(g.scale(mask_sum, 1.0 / n_rays));
        }
      }
    } else if (task.kind == Task::Eikonal) {
      const Mat pts = eik_points.middleRows(task.begin, task.end - task.begin);
      std::vector<Var> cols;
      for (int a = 0; a < 3; ++a)
        for (double sign : {1.0, -1.0}) {
          Mat shifted = pts;
          shifted.col(a).array() += sign * kEikonalStep;
          WarpResult warp =
              warp_points(g, model_.deform, model_.tmpl, ctx, batch.frame, shifted);
          cols.push_back(model_.field.query_geometry(g, warp.points).g);
        }
      std::vector<Var> grads;
      for (int a = 0; a < 3; ++a)
        grads.push_back(
            g.scale(g.sub(cols[2 * a], cols[2 * a + 1]), 1.0 / (2.0 * kEikonalStep)));
      Var dev = g.square(g.add_scalar(g.row_l2_norm(g.concat_cols(grads)), -1.0));
      Var sum = g.sum_all(dev);
      result.eikonal = g.value(sum)(0, 0);
      loss_parts.push_back(g.scale(sum, kEikonalWeight / cfg_.reg_points));
    } else if (task.kind == Task::Nsf) {
      const Mat pts = nsf_points.middleRows(task.begin, task.end - task.begin);
      Var x = g.constant(pts);
      Mat w_s = batch_blend_weights(model_.tmpl, ctx.grid, pts);
      Var w_obs =
          weight_field_at(g, model_.deform.residual_net(), model_.deform.psi(), batch.frame, x,
                          w_s);
      Var blend = g.matmul_const(w_obs, ctx.transforms_flat);
      Var solved = g.solve3x3(g.slice_cols(blend, 0, 9), g.sub(x, g.slice_cols(blend, 9, 3)));
      Mat w_s_can =
          batch_blend_weights(model_.tmpl, model_.canonical_grid, g.value(solved));
      Var w_can = weight_field_at(g, model_.deform.residual_net(),
                                  model_.deform.psi_canonical(), 0, solved, w_s_can);
      Var l1 = g.row_l1_norm(g.sub(w_obs, w_can));
      const auto& singular = g.singular_rows(solved);
      if (!singular.empty()) {
        Mat keep = Mat::Ones(pts.rows(), 1);
        for (int r : singular) keep(r, 0) = 0.0;
        l1 = g.mul(l1, g.constant(keep));
      }
      Var sum = g.sum_all(l1);
      result.nsf = g.value(sum)(0, 0);
      loss_parts.push_back(g.scale(sum, 1.0 / cfg_.reg_points));
    } else {  // Task::Dx
      const Mat pts = dx_points.middleRows(task.begin, task.end - task.begin);
      Var enc = positional_encoding(g, g.constant(pts), kDeformXyzFrequencies);
      Var pose = g.constant(ctx.pose_flat.transpose().replicate(pts.rows(), 1));
      Var disp = model_.deform.displacement_net().forward(g, g.concat_cols({enc, pose}));
      Var sum = g.sum_all(g.row_l2_norm(disp));
      result.dx = g.value(sum)(0, 0);
      loss_parts.push_back(g.scale(sum, kDisplacementWeight / cfg_.reg_points));
    }
    if (!loss_parts.empty()) {
      Var loss = loss_parts[0];
      for (size_t i = 1; i < loss_parts.size(); ++i) loss = g.add(loss, loss_parts[i]);
      g.backward(loss);
      collect_grads(g, model_.params, result);
    }
    return result;
  };

  std::vector<ChunkResult> results(tasks.size());
  if (cfg_.threads <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) results[i] = run_task(tasks[i]);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
        results[i] = run_task(tasks[i]);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg_.threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  ChunkResult total = tree_reduce(std::move(results), ChunkResult::combine);

  LossReport report;
  report.rays = n_rays;
  report.points = cfg_.reg_points;
  report.rgb = total.rgb / n_rays;
  if (sdf) {
    report.mask = total.mask / n_rays;
    report.eikonal = total.eikonal / cfg_.reg_points;
  }
  if (nbw) report.nsf = total.nsf / cfg_.reg_points;
  if (pdf) report.dx = total.dx / cfg_.reg_points;
  report.total = total_loss(variant, report);
  if (!std::isfinite(report.total))
    throw TrainingDivergedError("train_step: non-finite loss at iteration " +
                                std::to_string(iter) + " (frame " + std::to_string(batch.frame) +
                                ", " + std::to_string(n_rays) + " rays)");

  total.grads.resize(model_.params.size());
  state_.adam.step(
      model_.params,
      [&](const Parameter& p) -> const Mat* {
        return total.grads[p.id].size() == 0 ? nullptr : &total.grads[p.id];
      },
      lr);
  model_.field.clamp_beta();
  return report;
}

static void write_log_row(std::ostream& out, int64_t iter, double lr, double rho,
                          const LossReport& report) {
  auto field = [](const std::optional<double>& v) {
    char buf[32];
    if (!v.has_value()) return std::string();
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return std::string(buf);
  };
  char head[80];
  std::snprintf(head, sizeof(head), "%lld,%.17g,%.17g,", static_cast<long long>(iter), lr, rho);
  char tail[40];
  std::snprintf(tail, sizeof(tail), "%.17g", report.total);
  out << head << field(report.rgb) << ',' << field(report.mask) << ',' << field(report.eikonal)
      << ',' << field(report.nsf) << ',' << field(report.dx) << ',' << tail << "\n";
}

void Trainer::fit(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  const bool resuming = state_.iteration > 0;
  std::ofstream log(out_dir + "/train_log.csv", resuming ? std::ios::app : std::ios::out);
  if (!log) throw IoError("cannot write training log in " + out_dir);
  if (!resuming) log << "iter,lr,rho,rgb,mask,eikonal,nsf,dx,total\n";

  for (int64_t iter = state_.iteration; iter < cfg_.iterations; ++iter) {
    LossReport report;
    try {
      report = train_step(iter);
    } catch (const TrainingDivergedError&) {
      state_.iteration = iter;
      save_checkpoint(out_dir + "/crash.anif", model_, &state_);
      throw;
    }
    write_log_row(log, iter, lr_schedule(iter, cfg_.iterations), rho_schedule(iter), report);
    state_.iteration = iter + 1;
    if ((iter + 1) % cfg_.checkpoint_every == 0 && iter + 1 < cfg_.iterations)
      save_checkpoint(out_dir + "/checkpoint_" + frame_name(static_cast<int>(iter + 1)) + ".anif",
                      model_, &state_);
    log.flush();
  }
  save_checkpoint(out_dir + "/model.anif", model_, &state_);
}

int select_nearest_latent(const std::vector<Pose>& training_poses, const Pose& novel_pose) {
  if (training_poses.empty())
    throw InvalidArgumentError("select_nearest_latent: no training poses");
  const Vec target = novel_pose.flattened();
  int best = 0;
  double best_d = (training_poses[0].flattened() - target).norm();
  for (size_t i = 1; i < training_poses.size(); ++i) {
    const double d = (training_poses[i].flattened() - target).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

NovelPoseFit fit_novel_pose_weights(const Model& model, const std::vector<Pose>& novel_poses,
                                    const TrainConfig& config) {
  if (model.deform.variant() != DeformVariant::Nbw)
    throw InvalidVariantError(
        "fit_novel_pose_weights: displacement-field models animate directly");
  if (novel_poses.empty())
    throw InvalidArgumentError("fit_novel_pose_weights: no novel poses");

  NovelPoseFit fit;
  const int n_poses = static_cast<int>(novel_poses.size());
  NetworkShapes shapes =
      network_shapes(model.config.profile, model.parts(), kLatentDim);
  fit.residual = Mlp(fit.params, "animate.residual", shapes.weight_residual);
  Rng init_rng(splitmix64(config.seed ^ 0xA51Au));
  fit.residual.init_default(init_rng);
  fit.residual.zero_final_layer();  // w_new starts exactly at the template field
  fit.psi = &fit.params.create("animate.psi", n_poses, kLatentDim);
  fit.iterations = config.novel_iterations;

  std::vector<FrameContext> contexts;
  for (const Pose& pose : novel_poses)
    contexts.push_back(
        make_frame_context(model.tmpl, pose, model.canonical_pose, config.aabb_padding));

  auto eval_loss = [&](int pose_idx) {
    Rng rng(splitmix64(config.seed ^ (0xEDA1u + pose_idx)));
    Mat pts = sample_box_points(contexts[pose_idx].box, config.reg_points, rng);
    Graph g;
    Var x = g.constant(pts);
    Mat w_s = batch_blend_weights(model.tmpl, contexts[pose_idx].grid, pts);
    Var w_new = nbw_weight_field(g, fit.residual, *fit.psi, pose_idx, x, w_s);
    Var blend = g.matmul_const(w_new, contexts[pose_idx].transforms_flat);
    Var solved = g.solve3x3(g.slice_cols(blend, 0, 9), g.sub(x, g.slice_cols(blend, 9, 3)));
    Mat w_s_can = batch_blend_weights(model.tmpl, model.canonical_grid, g.value(solved));
    Var w_can = nbw_weight_field(g, model.deform.residual_net(), model.deform.psi_canonical(),
                                 0, solved, w_s_can);
    return g.value(g.scale(g.sum_all(g.row_l1_norm(g.sub(w_new, w_can))),
                           1.0 / pts.rows()))(0, 0);
  };
  for (int p = 0; p < n_poses; ++p) fit.initial_loss.push_back(eval_loss(p));

  Adam adam;
  Rng rng(splitmix64(config.seed ^ 0xF17Bu));
  for (int iter = 0; iter < fit.iterations; ++iter) {
    const int pose_idx = iter % n_poses;
    Mat pts = sample_box_points(contexts[pose_idx].box, config.reg_points, rng);
    Graph g;
    Var x = g.constant(pts);
    Mat w_s = batch_blend_weights(model.tmpl, contexts[pose_idx].grid, pts);
    Var w_new = nbw_weight_field(g, fit.residual, *fit.psi, pose_idx, x, w_s);
    Var blend = g.matmul_const(w_new, contexts[pose_idx].transforms_flat);
    Var solved = g.solve3x3(g.slice_cols(blend, 0, 9), g.sub(x, g.slice_cols(blend, 9, 3)));
    Mat w_s_can = batch_blend_weights(model.tmpl, model.canonical_grid, g.value(solved));
    Var w_can = nbw_weight_field(g, model.deform.residual_net(), model.deform.psi_canonical(), 0,
                                 solved, w_s_can);
    Var l1 = g.row_l1_norm(g.sub(w_new, w_can));
    const auto& singular = g.singular_rows(solved);
    if (!singular.empty()) {
      Mat keep = Mat::Ones(pts.rows(), 1);
      for (int r : singular) keep(r, 0) = 0.0;
      l1 = g.mul(l1, g.constant(keep));
    }
    Var loss = g.scale(g.sum_all(l1), 1.0 / pts.rows());
    g.backward(loss);
    // only the animation-stage store is stepped; the main model is frozen
    adam.step(
        fit.params,
        [&](const Parameter& p) -> const Mat* { return g.param_grad(p); },
        lr_schedule(iter, fit.iterations));
  }
  for (int p = 0; p < n_poses; ++p) fit.final_loss.push_back(eval_loss(p));
  return fit;
}

void save_novel_fit(const std::string& path, const NovelPoseFit& fit) {
  Checkpoint ckpt;
  ckpt.add_scalar("meta.poses", fit.psi->value.rows());
  ckpt.add_scalar("meta.iterations", fit.iterations);
  for (int id = 0; id < fit.params.size(); ++id) {
    const Parameter& p = fit.params.at(id);
    ckpt.add("param." + p.name, p.value);
  }
  for (size_t i = 0; i < fit.initial_loss.size(); ++i) {
    ckpt.add_scalar("loss.initial." + std::to_string(i), fit.initial_loss[i]);
    ckpt.add_scalar("loss.final." + std::to_string(i), fit.final_loss[i]);
  }
  ckpt.write(path);
}

}  // namespace anif
