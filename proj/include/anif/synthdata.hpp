// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/dataset.hpp"
#include "anif/evaluate.hpp"

namespace anif {

// Scripted capsule-human scene: body proportions, a periodic motion, an
// orbiting camera rig. Everything downstream is deterministic in (script,
// seed): images, masks, meshes and file bytes.
struct SceneScript {
  int frames = 30;
  int image_size = 128;
  uint64_t seed = 1;
  int camera_count = 4;
  double camera_radius = 2.7;
  double camera_height = 0.9;
  double focal_px = 170.0;
  int body_resolution = 8;
  double radius_scale = 1.0;
  double max_angle_deg = 40.0;  // limb swing amplitude
  double turn_deg = 40.0;       // root yaw amplitude
  int gt_mesh_every = 10;       // analytic ground-truth mesh cadence
  int gt_mesh_res = 256;

  void validate() const;
  static SceneScript load(const std::string& path);
  void save(const std::string& path) const;

  CapsuleBodySpec body_spec() const;
};

// Bone capsules under a pose: segment endpoints moved by their part's G_k.
struct PosedBody {
  Mat a;      // K x 3
  Mat b;      // K x 3
  Vec radii;  // K
};

PosedBody pose_body(const BoneSet& bones, const Vec& radii, const PartTransforms& transforms);

// min over bones of (distance to segment - radius): exact outside the
// union, conservative inside.
double analytic_posed_sdf(const Vec3& x, const PosedBody& body);
int nearest_part(const Vec3& x, const PosedBody& body);
Vec3 analytic_normal(const Vec3& x, const PosedBody& body);
Aabb posed_body_aabb(const PosedBody& body, double padding);

Vec3 part_albedo(int part);

// Deterministic periodic motion: arm raises, leg swings, a root turn. All
// joint angles stay moderate so inverse skinning remains well conditioned.
Pose scripted_pose(const SceneScript& script, const Skeleton& skeleton, int frame);

struct OracleFrame {
  Image rgb;
  MaskImage mask;
  Mat depth;  // height x width, 0 where the ray misses
};

// Sphere-traced ground truth: flat per-part albedo times a Lambert term
// under a fixed directional light; background black, mask 0.
OracleFrame render_oracle_frame(const SceneScript& script, int frame, const Camera& camera);

inline constexpr int kSphereTraceMaxSteps = 256;
inline constexpr double kSphereTraceEps = 1e-4;

// Writes the full dataset layout plus gt/ meshes and a script.json copy.
void generate_dataset(const SceneScript& script, const std::string& out_dir, int threads = 1);

}  // namespace anif
