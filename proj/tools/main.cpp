// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
//
// Subcommands: synth, train, render, animate, mesh, eval.
// Exit codes: 0 ok, 2 usage/validation, 3 I/O, 4 numerical divergence.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "anif/evaluate.hpp"
#include "anif/synthdata.hpp"
#include "anif/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anif;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

Model load_model_for(const FrameDataset& data, const std::string& checkpoint,
                     TrainState* state = nullptr) {
  return load_checkpoint(checkpoint, data.tmpl, data.canonical_pose, state);
}

std::vector<Pose> load_pose_list(const std::string& path, int joints) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  std::vector<Pose> poses;
  for (const auto& jp : j) {
    Pose p;
    p.rotations.resize(jp.size(), 3);
    for (size_t i = 0; i < jp.size(); ++i)
      for (int c = 0; c < 3; ++c) p.rotations(i, c) = jp[i][c].get<double>();
    if (p.joint_count() != joints)
      throw InvalidArgumentError("pose list: joint count mismatch in " + path);
    poses.push_back(std::move(p));
  }
  if (poses.empty()) throw InvalidArgumentError("pose list is empty: " + path);
  return poses;
}

int cmd_synth(const std::string& script_path, const std::string& out, int threads) {
  if (!fs::exists(script_path)) throw IoError("script file not found: " + script_path);
  SceneScript script = SceneScript::load(script_path);
  generate_dataset(script, out, threads);
  std::cout << "dataset written to " << out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& variant, const std::string& out, int iterations, int rays,
              int64_t seed, int threads, const std::string& resume) {
  FrameDataset data = load_dataset(data_dir);
  TrainConfig cfg;
  if (!config_path.empty()) cfg = TrainConfig::load(config_path);
  if (!variant.empty()) cfg.variant = parse_variant(variant);
  if (iterations > 0) cfg.iterations = iterations;
  if (rays > 0) cfg.rays_per_batch = rays;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  if (threads > 0) cfg.threads = threads;
  cfg.validate();

  Model model;
  TrainState state;
  if (!resume.empty()) {
    model = load_model_for(data, resume, &state);
  } else {
    ModelConfig mc;
    mc.variant = cfg.variant;
    mc.profile = cfg.profile;
    mc.frames = data.frame_count();
    mc.aabb_padding = cfg.aabb_padding;
    mc.init_seed = cfg.seed;
    model = build_model(mc, data.tmpl, data.canonical_pose);
  }
  Trainer trainer(model, data, cfg);
  if (!resume.empty()) trainer.state() = std::move(state);
  fs::create_directories(out);
  cfg.save(out + "/config.json");
  trainer.fit(out);
  std::cout << "trained " << variant_name(cfg.variant) << " for " << cfg.iterations
            << " iterations -> " << out << "/model.anif\n";
  return kExitOk;
}

int cmd_render(const std::string& checkpoint, const std::string& data_dir, int frame, int camera,
               const std::string& out, int threads, int64_t seed) {
  FrameDataset data = load_dataset(data_dir);
  if (frame < 0 || frame >= data.frame_count())
    throw InvalidArgumentError("render: frame out of range");
  if (camera < 0 || camera >= data.camera_count())
    throw InvalidArgumentError("render: unknown camera id " + std::to_string(camera));
  Model model = load_model_for(data, checkpoint);
  FrameContext ctx = model.frame_context(data.poses[frame]);
  Image img = render_image(model, ctx, frame, data.cameras[camera], kDefaultSamplesPerRay,
                           static_cast<uint64_t>(seed), threads);
  save_png(img, out);
  std::cout << "rendered frame " << frame << " camera " << camera << " -> " << out << "\n";
  return kExitOk;
}

int cmd_animate(const std::string& checkpoint, const std::string& data_dir,
                const std::string& poses_path, int camera, const std::string& out, int threads,
                int fit_iterations, int64_t seed) {
  FrameDataset data = load_dataset(data_dir);
  if (camera < 0 || camera >= data.camera_count())
    throw InvalidArgumentError("animate: unknown camera id " + std::to_string(camera));
  Model model = load_model_for(data, checkpoint);
  std::vector<Pose> novel = load_pose_list(poses_path, data.tmpl.skeleton.joint_count());
  fs::create_directories(out);

  std::ofstream log(out + "/animate_log.txt");
  int fit_iters = 0;
  NovelPoseFit fit;
  if (model.deform.variant() == DeformVariant::Nbw) {
    TrainConfig cfg;
    cfg.variant = model.config.variant;
    cfg.seed = static_cast<uint64_t>(seed);
    if (fit_iterations > 0) cfg.novel_iterations = fit_iterations;
    fit = fit_novel_pose_weights(model, novel, cfg);
    fit_iters = fit.iterations;
    save_novel_fit(out + "/novel_weights.anif", fit);
  }
  log << "poses=" << novel.size() << "\n";
  log << "fit_iterations=" << fit_iters << "\n";

  for (size_t p = 0; p < novel.size(); ++p) {
    FrameContext ctx = model.frame_context(novel[p]);
    const int appearance = select_nearest_latent(data.poses, novel[p]);
    RenderSetup setup;
    setup.field = &model.field;
    setup.tmpl = &model.tmpl;
    setup.ctx = &ctx;
    setup.appearance_frame = appearance;
    DeformationModel animated;
    if (model.deform.variant() == DeformVariant::Nbw) {
      animated = DeformationModel::nbw_override(fit.residual, *fit.psi);
      setup.deform = &animated;
      setup.deform_frame = static_cast<int>(p);
    } else {
      setup.deform = &model.deform;
      setup.deform_frame = appearance;
    }
    Image img = render_image(setup, data.cameras[camera], kDefaultSamplesPerRay,
                             static_cast<uint64_t>(seed), threads);
    save_png(img, out + "/pose_" + frame_name(static_cast<int>(p)) + ".png");
    log << "pose " << p << ": appearance_frame=" << appearance << "\n";
  }
  std::cout << "animated " << novel.size() << " poses -> " << out << "\n";
  return kExitOk;
}

int cmd_mesh(const std::string& checkpoint, const std::string& data_dir, int frame,
             int resolution, const std::string& out, double density_threshold) {
  FrameDataset data = load_dataset(data_dir);
  if (frame < 0 || frame >= data.frame_count())
    throw InvalidArgumentError("mesh: frame out of range");
  Model model = load_model_for(data, checkpoint);
  FrameContext ctx = model.frame_context(data.poses[frame]);

  // observation-space grid, each sample warped then queried
  auto sampler = [&](const Vec3& p) {
    Graph g;
    Mat pt(1, 3);
    pt.row(0) = p.transpose();
    WarpResult warp = warp_points(g, model.deform, model.tmpl, ctx, frame, pt);
    if (!warp.singular.empty()) return model.mode() == GeometryMode::Sdf ? 1e3 : 0.0;
    return g.value(model.field.query_geometry(g, warp.points).g)(0, 0);
  };
  TriMesh mesh;
  if (model.mode() == GeometryMode::Sdf)
    mesh = marching_cubes(sampler, ctx.box, resolution, 0.0);
  else
    mesh = marching_cubes(sampler, ctx.box, resolution, density_threshold, false);
  save_obj(mesh.vertices, mesh.faces, out);
  std::cout << "mesh with " << mesh.vertices.rows() << " vertices -> " << out << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& report,
             const std::string& data_dir, int camera, int every, int mesh_samples) {
  json frames = json::array();
  double sum_psnr = 0, sum_ssim = 0, sum_p2s = 0, sum_cd = 0;
  int n_img = 0, n_mesh = 0;

  FrameDataset data;
  bool with_region = false;
  if (!data_dir.empty()) {
    data = load_dataset(data_dir);
    if (camera < 0 || camera >= data.camera_count())
      throw InvalidArgumentError("eval: unknown camera id");
    with_region = true;
  }

  for (int frame = 0;; frame += every) {
    const std::string name = frame_name(frame);
    const std::string pred_png = pred_dir + "/" + name + ".png";
    const std::string gt_png = gt_dir + "/" + name + ".png";
    const bool have_images = fs::exists(pred_png) && fs::exists(gt_png);
    const std::string pred_mesh = pred_dir + "/mesh_" + name + ".obj";
    const std::string gt_mesh = gt_dir + "/mesh_" + name + ".obj";
    const bool have_meshes = fs::exists(pred_mesh) && fs::exists(gt_mesh);
    if (!have_images && !have_meshes) {
      if (frame == 0) break;
      if (frame / every > 10000) break;
      break;
    }
    json entry{{"frame", frame}};
    if (have_images) {
      Image a = load_png(pred_png);
      Image b = load_png(gt_png);
      MaskImage region;
      int c0 = 0, r0 = 0, c1 = a.width, r1 = a.height;
      if (with_region && frame < data.frame_count()) {
        FrameContext ctx = make_frame_context(data.tmpl, data.poses[frame],
                                              data.canonical_pose, 0.05);
        ProjectedBox proj = project_bbox_mask(ctx.box, data.cameras[camera]);
        if (proj.empty()) throw InvalidArgumentError("eval: projected box is empty");
        region = proj.mask;
        c0 = proj.col0;
        r0 = proj.row0;
        c1 = proj.col1;
        r1 = proj.row1;
      } else {
        region = MaskImage(a.width, a.height);
        std::fill(region.data.begin(), region.data.end(), 1);
      }
      const double p = psnr(a, b, region);
      const double s = ssim(a, b, c0, r0, c1, r1);
      entry["psnr"] = p;
      entry["ssim"] = s;
      sum_psnr += p;
      sum_ssim += s;
      ++n_img;
    }
    if (have_meshes) {
      TriMesh pm, gm;
      load_obj(pred_mesh, pm.vertices, pm.faces);
      load_obj(gt_mesh, gm.vertices, gm.faces);
      const double d_p2s = p2s(pm, gm, mesh_samples);
      const double d_cd = chamfer(pm, gm, mesh_samples);
      entry["p2s"] = d_p2s;
      entry["cd"] = d_cd;
      sum_p2s += d_p2s;
      sum_cd += d_cd;
      ++n_mesh;
    }
    frames.push_back(entry);
  }
  if (frames.empty()) throw IoError("eval: no matching frames under " + pred_dir);

  json means;
  if (n_img > 0) {
    means["psnr"] = sum_psnr / n_img;
    means["ssim"] = sum_ssim / n_img;
  }
  if (n_mesh > 0) {
    means["p2s"] = sum_p2s / n_mesh;
    means["cd"] = sum_cd / n_mesh;
  }
  json j{{"frames", frames}, {"means", means}};
  std::ofstream out(report);
  if (!out) throw IoError("cannot write " + report);
  out << j.dump(1) << "\n";
  std::cout << "report -> " << report << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"animatable neural implicit fields"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic capsule-human dataset");
  std::string synth_script, synth_out;
  int synth_threads = 1;
  synth->add_option("--script", synth_script, "scene script JSON")->required();
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--threads", synth_threads, "worker threads");

  auto* train = app.add_subcommand("train", "optimize a model on a dataset");
  std::string train_data, train_config, train_variant, train_out, train_resume;
  int train_iters = 0, train_rays = 0, train_threads = 0;
  int64_t train_seed = -1;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--config", train_config, "train config JSON");
  train->add_option("--variant", train_variant, "nerf-nbw | nerf-pdf | sdf-pdf");
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--iterations", train_iters, "override iteration count");
  train->add_option("--rays", train_rays, "override rays per batch");
  train->add_option("--seed", train_seed, "override seed");
  train->add_option("--threads", train_threads, "worker threads");
  train->add_option("--resume", train_resume, "checkpoint to resume from");

  auto* render = app.add_subcommand("render", "render one training frame");
  std::string render_ckpt, render_data, render_out;
  int render_frame = 0, render_camera = 0, render_threads = 1;
  int64_t render_seed = 1;
  render->add_option("--checkpoint", render_ckpt, "model checkpoint")->required();
  render->add_option("--data", render_data, "dataset directory")->required();
  render->add_option("--frame", render_frame, "frame index")->required();
  render->add_option("--camera", render_camera, "camera index")->required();
  render->add_option("--out", render_out, "output PNG")->required();
  render->add_option("--threads", render_threads, "worker threads");
  render->add_option("--seed", render_seed, "sampling seed");

  auto* animate = app.add_subcommand("animate", "render novel poses");
  std::string anim_ckpt, anim_data, anim_poses, anim_out;
  int anim_camera = 0, anim_threads = 1, anim_fit_iters = 0;
  int64_t anim_seed = 1;
  animate->add_option("--checkpoint", anim_ckpt, "model checkpoint")->required();
  animate->add_option("--data", anim_data, "dataset directory")->required();
  animate->add_option("--poses", anim_poses, "JSON array of novel poses")->required();
  animate->add_option("--camera", anim_camera, "camera index")->required();
  animate->add_option("--out", anim_out, "output directory")->required();
  animate->add_option("--threads", anim_threads, "worker threads");
  animate->add_option("--fit-iterations", anim_fit_iters, "nbw animation-fit budget");
  animate->add_option("--seed", anim_seed, "sampling seed");

  auto* mesh = app.add_subcommand("mesh", "extract a mesh with marching cubes");
  std::string mesh_ckpt, mesh_data, mesh_out;
  int mesh_frame = 0, mesh_res = 128;
  double mesh_threshold = kDensityMeshThreshold;
  mesh->add_option("--checkpoint", mesh_ckpt, "model checkpoint")->required();
  mesh->add_option("--data", mesh_data, "dataset directory")->required();
  mesh->add_option("--frame", mesh_frame, "frame index")->required();
  mesh->add_option("--res", mesh_res, "grid resolution per axis");
  mesh->add_option("--out", mesh_out, "output OBJ")->required();
  mesh->add_option("--threshold", mesh_threshold, "density threshold (density mode)");

  auto* eval = app.add_subcommand("eval", "image and mesh metrics");
  std::string eval_pred, eval_gt, eval_report, eval_data;
  int eval_camera = -1, eval_every = 1, eval_samples = 10000;
  eval->add_option("--pred", eval_pred, "predicted images/meshes directory")->required();
  eval->add_option("--gt", eval_gt, "ground-truth images/meshes directory")->required();
  eval->add_option("--report", eval_report, "output JSON report")->required();
  eval->add_option("--data", eval_data, "dataset directory (enables bbox-projected region)");
  eval->add_option("--camera", eval_camera, "camera for region projection");
  eval->add_option("--every", eval_every, "evaluate every Nth frame");
  eval->add_option("--mesh-samples", eval_samples, "surface samples for P2S/CD");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_script, synth_out, synth_threads);
    if (train->parsed())
      return cmd_train(train_data, train_config, train_variant, train_out, train_iters,
                       train_rays, train_seed, train_threads, train_resume);
    if (render->parsed())
      return cmd_render(render_ckpt, render_data, render_frame, render_camera, render_out,
                        render_threads, render_seed);
    if (animate->parsed())
      return cmd_animate(anim_ckpt, anim_data, anim_poses, anim_camera, anim_out, anim_threads,
                         anim_fit_iters, anim_seed);
    if (mesh->parsed())
      return cmd_mesh(mesh_ckpt, mesh_data, mesh_frame, mesh_res, mesh_out, mesh_threshold);
    if (eval->parsed())
      return cmd_eval(eval_pred, eval_gt, eval_report, eval_data, eval_camera, eval_every,
                      eval_samples);
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
