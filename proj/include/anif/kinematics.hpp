// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "anif/common.hpp"

namespace anif {

// Kinematic tree. `joints` holds the per-joint offset used in the chain
// product [R(w_i) | j_i]: the root entry is absolute, each child entry is
// relative to its parent frame. World centers at the rest pose are the
// cumulative offsets along the parent chain (see joint_rest_positions).
struct Skeleton {
  std::vector<int> parents;  // root has parent -1
  Mat joints;                // K x 3, meters

  int joint_count() const { return static_cast<int>(parents.size()); }
  void validate() const;
};

// Per-joint relative rotations, axis-angle, radians.
struct Pose {
  Mat rotations;  // K x 3

  int joint_count() const { return static_cast<int>(rotations.rows()); }
  static Pose rest(int k) {
    Pose p;
    p.rotations = Mat::Zero(k, 3);
    return p;
  }
  Vec flattened() const;  // 3K vector, row-major
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_dir(const Vec3& d) const { return rotation * d; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  RigidTransform compose(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

// The per-part observation<->canonical transforms G_k.
struct PartTransforms {
  std::vector<RigidTransform> parts;

  int part_count() const { return static_cast<int>(parts.size()); }
};

// Axis-angle to rotation matrix. Angles below 1e-8 take a second-order
// Taylor branch of the exponential map.
Mat3 rodrigues(const Vec3& omega);

// Absolute transforms A_k: ordered product of [R(w_i) | j_i] blocks from
// the root down to joint k.
std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

// G_k = A_k(target) * A_k(canonical)^-1, rigid inverse throughout.
PartTransforms part_transforms(const Skeleton& skeleton, const Pose& pose_target,
                               const Pose& pose_canonical);

// World joint centers at a given pose (translation part of A_k).
Mat joint_positions(const Skeleton& skeleton, const Pose& pose);

// File formats: skeleton JSON {"parents": [...], "joints": [[x,y,z],...]},
// pose JSON [[wx,wy,wz],...].
Skeleton load_skeleton(const std::string& path);
void save_skeleton(const Skeleton& skeleton, const std::string& path);
Pose load_pose(const std::string& path);
void save_pose(const Pose& pose, const std::string& path);

}  // namespace anif
