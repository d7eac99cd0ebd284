// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/synthdata.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "anif/render.hpp"

namespace anif {

namespace fs = std::filesystem;
using nlohmann::json;

void SceneScript::validate() const {
  if (frames < 1) throw InvalidArgumentError("scene script: need at least one frame");
  if (image_size < 8) throw InvalidArgumentError("scene script: image size too small");
  if (camera_count < 1) throw InvalidArgumentError("scene script: need a camera");
  if (gt_mesh_res < 2) throw InvalidArgumentError("scene script: gt mesh resolution too small");
}

SceneScript SceneScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  SceneScript s;
  s.frames = j.value("frames", s.frames);
  s.image_size = j.value("image_size", s.image_size);
  s.seed = j.value("seed", s.seed);
  s.camera_count = j.value("camera_count", s.camera_count);
  s.camera_radius = j.value("camera_radius", s.camera_radius);
  s.camera_height = j.value("camera_height", s.camera_height);
  s.focal_px = j.value("focal_px", s.focal_px);
  s.body_resolution = j.value("body_resolution", s.body_resolution);
  s.radius_scale = j.value("radius_scale", s.radius_scale);
  s.max_angle_deg = j.value("max_angle_deg", s.max_angle_deg);
  s.turn_deg = j.value("turn_deg", s.turn_deg);
  s.gt_mesh_every = j.value("gt_mesh_every", s.gt_mesh_every);
  s.gt_mesh_res = j.value("gt_mesh_res", s.gt_mesh_res);
  s.validate();
  return s;
}

void SceneScript::save(const std::string& path) const {
  json j{{"frames", frames},
         {"image_size", image_size},
         {"seed", seed},
         {"camera_count", camera_count},
         {"camera_radius", camera_radius},
         {"camera_height", camera_height},
         {"focal_px", focal_px},
         {"body_resolution", body_resolution},
         {"radius_scale", radius_scale},
         {"max_angle_deg", max_angle_deg},
         {"turn_deg", turn_deg},
         {"gt_mesh_every", gt_mesh_every},
         {"gt_mesh_res", gt_mesh_res}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << "\n";
}

CapsuleBodySpec SceneScript::body_spec() const {
  CapsuleBodySpec spec = CapsuleBodySpec::humanoid();
  spec.resolution = body_resolution;
  spec.radii *= radius_scale;
  return spec;
}

PosedBody pose_body(const BoneSet& bones, const Vec& radii, const PartTransforms& transforms) {
  const int k = static_cast<int>(radii.size());
  PosedBody body;
  body.a.resize(k, 3);
  body.b.resize(k, 3);
  body.radii = radii;
  for (int p = 0; p < k; ++p) {
    body.a.row(p) = transforms.parts[p].apply(bones.a.row(p).transpose()).transpose();
    body.b.row(p) = transforms.parts[p].apply(bones.b.row(p).transpose()).transpose();
  }
  return body;
}

double analytic_posed_sdf(const Vec3& x, const PosedBody& body) {
  double best = std::numeric_limits<double>::infinity();
  for (int p = 0; p < body.radii.size(); ++p)
    best = std::min(best, point_segment_distance(x, body.a.row(p).transpose(),
                                                 body.b.row(p).transpose()) -
                              body.radii[p]);
  return best;
}

int nearest_part(const Vec3& x, const PosedBody& body) {
  int arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 0; p < body.radii.size(); ++p) {
    const double d = point_segment_distance(x, body.a.row(p).transpose(),
                                            body.b.row(p).transpose()) -
                     body.radii[p];
    if (d < best) {
      best = d;
      arg = p;
    }
  }
  return arg;
}

Vec3 analytic_normal(const Vec3& x, const PosedBody& body) {
  const int p = nearest_part(x, body);
  const Vec3 q =
      closest_point_on_segment(x, body.a.row(p).transpose(), body.b.row(p).transpose());
  const Vec3 n = x - q;
  const double len = n.norm();
  return len > 1e-12 ? Vec3(n / len) : Vec3::UnitY();
}

Aabb posed_body_aabb(const PosedBody& body, double padding) {
  Mat pts(body.a.rows() * 2, 3);
  pts << body.a, body.b;
  return points_aabb(pts, padding + body.radii.maxCoeff());
}

Vec3 part_albedo(int part) {
  // fixed palette, one well-separated hue per part
  const double h = std::fmod(part * 0.6180339887498949, 1.0) * 6.0;
  const double s = 0.65, v = 0.95;
  const int i = static_cast<int>(h);
  const double f = h - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Pose scripted_pose(const SceneScript& script, const Skeleton& skeleton, int frame) {
  const int k = skeleton.joint_count();
  Pose pose = Pose::rest(k);
  if (k != 24) return pose;  // the scripted motion targets the humanoid rig
  const double phase = 2.0 * kPi * frame / script.frames;
  const double swing = script.max_angle_deg * kPi / 180.0;
  const double turn = script.turn_deg * kPi / 180.0;
  const double s = std::sin(phase);
  const double c = std::cos(phase);
  pose.rotations.row(0) = Vec3(0, turn * s, 0).transpose();            // pelvis yaw
  pose.rotations.row(3) = Vec3(0, 0.3 * turn * c, 0).transpose();     // spine twist
  pose.rotations.row(16) = Vec3(0, 0, swing * s).transpose();         // l shoulder
  pose.rotations.row(17) = Vec3(0, 0, -swing * s).transpose();        // r shoulder
  pose.rotations.row(18) = Vec3(0, 0.5 * swing * c, 0).transpose();   // l elbow
  pose.rotations.row(19) = Vec3(0, -0.5 * swing * c, 0).transpose();  // r elbow
  pose.rotations.row(1) = Vec3(0.4 * swing * s, 0, 0).transpose();    // l hip
  pose.rotations.row(2) = Vec3(-0.4 * swing * s, 0, 0).transpose();   // r hip
  pose.rotations.row(4) = Vec3(0.25 * swing * (1 - c), 0, 0).transpose();   // l knee
  pose.rotations.row(5) = Vec3(0.25 * swing * (1 + c), 0, 0).transpose();   // r knee
  pose.rotations.row(12) = Vec3(0, 0.2 * turn * s, 0).transpose();    // neck
  return pose;
}

OracleFrame render_oracle_frame(const SceneScript& script, int frame, const Camera& camera) {
  script.validate();
  if (frame < 0 || frame >= script.frames)
    throw InvalidArgumentError("render_oracle_frame: frame out of range");
  CapsuleBodySpec spec = script.body_spec();
  BoneSet bones = compute_bones(spec);
  const Pose pose = scripted_pose(script, spec.skeleton, frame);
  const Pose rest = Pose::rest(spec.skeleton.joint_count());
  PartTransforms transforms = part_transforms(spec.skeleton, pose, rest);
  PosedBody body = pose_body(bones, spec.radii, transforms);
  const Aabb box = posed_body_aabb(body, 0.02);
  const Vec3 light = Vec3(0.4, 1.0, 0.6).normalized();

  OracleFrame out;
  out.rgb = Image(camera.width, camera.height);
  out.mask = MaskImage(camera.width, camera.height);
  out.depth = Mat::Zero(camera.height, camera.width);
  for (int row = 0; row < camera.height; ++row)
    for (int col = 0; col < camera.width; ++col) {
      const Ray ray = generate_ray(camera, row, col);
      auto interval = ray_aabb_bounds(ray, box);
      if (!interval) continue;
      double t = interval->near;
      for (int step = 0; step < kSphereTraceMaxSteps && t <= interval->far; ++step) {
        const Vec3 p = ray.origin + t * ray.direction;
        const double d = analytic_posed_sdf(p, body);
        if (d < kSphereTraceEps) {
          const Vec3 n = analytic_normal(p, body);
          const double lambert = std::max(0.0, n.dot(light));
          const Vec3 rgb = part_albedo(nearest_part(p, body)) * lambert;
          for (int ch = 0; ch < 3; ++ch) out.rgb.at(row, col, ch) = rgb[ch];
          out.mask.at(row, col) = 1;
          out.depth(row, col) = t;
          break;
        }
        t += d;
      }
    }
  return out;
}

void generate_dataset(const SceneScript& script, const std::string& out_dir, int threads) {
  script.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  for (const char* sub : {"poses", "images", "masks", "gt"})
    fs::create_directories(out_dir + "/" + sub);

  CapsuleBodySpec spec = script.body_spec();
  SkinnedTemplate tmpl = build_capsule_body(spec);
  BoneSet bones = compute_bones(spec);
  const Pose rest = Pose::rest(spec.skeleton.joint_count());

  save_skeleton(spec.skeleton, out_dir + "/skeleton.json");
  save_obj(tmpl.vertices, tmpl.faces, out_dir + "/template.obj");
  save_weights(tmpl.weights, out_dir + "/template.weights");
  save_pose(rest, out_dir + "/canonical_pose.json");
  script.save(out_dir + "/script.json");

  const Vec3 target = tmpl.vertices.colwise().mean().transpose();
  std::vector<Camera> cameras;
  for (int c = 0; c < script.camera_count; ++c)
    cameras.push_back(orbit_camera(2.0 * kPi * c / script.camera_count, script.camera_radius,
                                   script.camera_height - target.y(), target, script.focal_px,
                                   script.image_size, script.image_size));
  save_cameras(cameras, out_dir + "/cameras.json");

  std::vector<Pose> poses;
  for (int f = 0; f < script.frames; ++f) {
    poses.push_back(scripted_pose(script, spec.skeleton, f));
    save_pose(poses.back(), pose_path(out_dir, f));
  }
  for (int c = 0; c < script.camera_count; ++c) {
    fs::create_directories(out_dir + "/images/" + std::to_string(c));
    fs::create_directories(out_dir + "/masks/" + std::to_string(c));
  }

  std::atomic<int> next{0};
  const int jobs = script.frames * script.camera_count;
  auto worker = [&]() {
    for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
      const int f = j / script.camera_count;
      const int c = j % script.camera_count;
      OracleFrame frame = render_oracle_frame(script, f, cameras[c]);
      save_png(frame.rgb, image_path(out_dir, c, f));
      save_mask_png(frame.mask, mask_path(out_dir, c, f));
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // analytic ground-truth meshes
  auto mesh_of = [&](const Pose& pose) {
    PartTransforms transforms = part_transforms(spec.skeleton, pose, rest);
    PosedBody body = pose_body(bones, spec.radii, transforms);
    const Aabb box = posed_body_aabb(body, 0.05);
    return marching_cubes([&](const Vec3& p) { return analytic_posed_sdf(p, body); }, box,
                          script.gt_mesh_res, 0.0);
  };
  TriMesh canonical = mesh_of(rest);
  save_obj(canonical.vertices, canonical.faces, out_dir + "/gt/canonical_mesh.obj");
  for (int f = 0; f < script.frames; f += std::max(1, script.gt_mesh_every)) {
    TriMesh mesh = mesh_of(poses[f]);
    save_obj(mesh.vertices, mesh.faces, out_dir + "/gt/mesh_" + frame_name(f) + ".obj");
  }
}

}  // namespace anif
