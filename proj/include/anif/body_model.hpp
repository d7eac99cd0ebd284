// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "anif/kinematics.hpp"

namespace anif {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  Aabb padded(double pad) const { return {min.array() - pad, max.array() + pad}; }
};

// Canonical-pose surface mesh with per-vertex blend weights. Stands in for
// any skinned parametric body; the procedural capsule body below is the
// default, an external mesh+weights pair drops in through the same loader.
struct SkinnedTemplate {
  Mat vertices;                           // V x 3, canonical pose
  Eigen::Matrix<int, -1, 3> faces;        // F x 3
  Mat weights;                            // V x K, rows sum to 1
  Skeleton skeleton;

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int part_count() const { return static_cast<int>(weights.cols()); }
  void validate() const;
};

// Eq. 3 applied to every template vertex: v' = (sum_k w_k G_k) v.
Mat pose_mesh(const SkinnedTemplate& tmpl, const PartTransforms& transforms);

// Uniform hash grid over a posed vertex set. Queries return exactly the
// brute-force nearest vertex (lowest index on distance ties).
class VertexGrid {
 public:
  VertexGrid() = default;
  explicit VertexGrid(const Mat& points);

  int nearest(const Vec3& q) const;
  const Mat& points() const { return points_; }

 private:
  Mat points_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  int dims_[3] = {0, 0, 0};
  std::vector<int> cell_start_;
  std::vector<int> order_;

  int cell_index(int x, int y, int z) const {
    return (z * dims_[1] + y) * dims_[0] + x;
  }
};

int nearest_vertex_bruteforce(const Mat& points, const Vec3& q);

// Blend weights of the posed vertex nearest to x.
Vec query_blend_weights(const SkinnedTemplate& tmpl, const Mat& posed_vertices, const Vec3& x);
Vec query_blend_weights(const SkinnedTemplate& tmpl, const VertexGrid& grid, const Vec3& x);

Aabb posed_aabb(const SkinnedTemplate& tmpl, const PartTransforms& transforms, double padding);
Aabb points_aabb(const Mat& points, double padding);

// One bone segment per part, canonical pose, world frame. Non-leaf parts run
// from their joint to the first child joint; leaves extend past the joint
// along the incoming bone direction.
struct BoneSet {
  Mat a;  // K x 3 segment starts
  Mat b;  // K x 3 segment ends
};

struct CapsuleBodySpec {
  Skeleton skeleton;
  Vec radii;            // per part, meters
  Vec leaf_tip_length;  // per part; used only for leaf joints
  int resolution = 8;   // capsule tessellation (segments around the axis)

  static CapsuleBodySpec humanoid();  // default 24-part body
};

BoneSet compute_bones(const CapsuleBodySpec& spec);

// Union-of-capsules template. Per-vertex weights use normalized inverse
// squared distance to the two nearest bone segments.
SkinnedTemplate build_capsule_body(const CapsuleBodySpec& spec);

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);
Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

// Wavefront OBJ (v/f only) and the plain-text weights sidecar.
void save_obj(const Mat& vertices, const Eigen::Matrix<int, -1, 3>& faces,
              const std::string& path);
void load_obj(const std::string& path, Mat& vertices, Eigen::Matrix<int, -1, 3>& faces);
void save_weights(const Mat& weights, const std::string& path);
Mat load_weights(const std::string& path, int expected_rows);

}  // namespace anif
