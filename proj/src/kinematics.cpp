// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/kinematics.hpp"

#include <fstream>

#include <json.hpp>

namespace anif {

using nlohmann::json;

void Skeleton::validate() const {
  const int k = joint_count();
  if (k < 1) throw InvalidArgumentError("skeleton: need at least one joint");
  if (joints.rows() != k || joints.cols() != 3)
    throw InvalidArgumentError("skeleton: joints must be K x 3");
  int roots = 0;
  for (int i = 0; i < k; ++i) {
    if (parents[i] == -1) {
      ++roots;
    } else if (parents[i] < 0 || parents[i] >= i) {
      throw InvalidArgumentError("skeleton: parents must be topologically ordered");
    }
  }
  if (roots != 1) throw InvalidArgumentError("skeleton: exactly one root required");
  if (!joints.allFinite()) throw InvalidArgumentError("skeleton: non-finite joint");
}

Vec Pose::flattened() const {
  Vec out(rotations.size());
  for (int i = 0; i < rotations.rows(); ++i)
    for (int j = 0; j < 3; ++j) out[i * 3 + j] = rotations(i, j);
  return out;
}

Mat3 rodrigues(const Vec3& omega) {
  if (!omega.allFinite()) throw InvalidArgumentError("rodrigues: non-finite axis-angle");
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  Mat3 hat;
  hat << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
  double a, b;  // R = I + a*hat + b*hat^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * hat + b * (hat * hat);
}

std::vector<RigidTransform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
  skeleton.validate();
  const int k = skeleton.joint_count();
  if (pose.joint_count() != k)
    throw InvalidArgumentError("forward_kinematics: pose length mismatch");
  std::vector<RigidTransform> abs(k);
  for (int i = 0; i < k; ++i) {
    RigidTransform local{rodrigues(pose.rotations.row(i).transpose()),
                         skeleton.joints.row(i).transpose()};
    abs[i] = skeleton.parents[i] < 0 ? local : abs[skeleton.parents[i]].compose(local);
  }
  return abs;
}

PartTransforms part_transforms(const Skeleton& skeleton, const Pose& pose_target,
                               const Pose& pose_canonical) {
  auto target = forward_kinematics(skeleton, pose_target);
  auto canonical = forward_kinematics(skeleton, pose_canonical);
  PartTransforms out;
  out.parts.resize(target.size());
  for (size_t i = 0; i < target.size(); ++i)
    out.parts[i] = target[i].compose(canonical[i].inverse());
  return out;
}

Mat joint_positions(const Skeleton& skeleton, const Pose& pose) {
  auto abs = forward_kinematics(skeleton, pose);
  Mat out(abs.size(), 3);
  for (size_t i = 0; i < abs.size(); ++i) out.row(i) = abs[i].translation.transpose();
  return out;
}

static json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  return j;
}

static void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << "\n";
}

Skeleton load_skeleton(const std::string& path) {
  json j = load_json(path);
  Skeleton s;
  s.parents = j.at("parents").get<std::vector<int>>();
  const auto& joints = j.at("joints");
  s.joints.resize(joints.size(), 3);
  for (size_t i = 0; i < joints.size(); ++i)
    for (int c = 0; c < 3; ++c) s.joints(i, c) = joints[i][c].get<double>();
  s.validate();
  return s;
}

void save_skeleton(const Skeleton& skeleton, const std::string& path) {
  json joints = json::array();
  for (int i = 0; i < skeleton.joint_count(); ++i)
    joints.push_back({skeleton.joints(i, 0), skeleton.joints(i, 1), skeleton.joints(i, 2)});
  save_json({{"parents", skeleton.parents}, {"joints", joints}}, path);
}

Pose load_pose(const std::string& path) {
  json j = load_json(path);
  Pose p;
  p.rotations.resize(j.size(), 3);
  for (size_t i = 0; i < j.size(); ++i)
    for (int c = 0; c < 3; ++c) p.rotations(i, c) = j[i][c].get<double>();
  if (!p.rotations.allFinite()) throw IoError("pose file has non-finite entries: " + path);
  return p;
}

void save_pose(const Pose& pose, const std::string& path) {
  json j = json::array();
  for (int i = 0; i < pose.joint_count(); ++i)
    j.push_back({pose.rotations(i, 0), pose.rotations(i, 1), pose.rotations(i, 2)});
  save_json(j, path);
}

}  // namespace anif
