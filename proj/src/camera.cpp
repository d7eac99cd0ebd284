// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/camera.hpp"

#include <fstream>

#include <json.hpp>

namespace anif {

using nlohmann::json;

void Camera::validate() const {
  if (intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0)
    throw InvalidArgumentError("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgumentError("camera: bad image size");
  if (((rotation * rotation.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
    throw InvalidArgumentError("camera: rotation not orthonormal");
}

bool Camera::project(const Vec3& p, double& u, double& v, double* depth) const {
  const Vec3 cam = rotation * p + translation;
  if (cam.z() <= 1e-12) return false;
  u = intrinsics(0, 0) * cam.x() / cam.z() + intrinsics(0, 2);
  v = intrinsics(1, 1) * cam.y() / cam.z() + intrinsics(1, 2);
  if (depth != nullptr) *depth = cam.z();
  return true;
}

Ray generate_ray(const Camera& camera, int row, int col) {
  if (row < 0 || row >= camera.height || col < 0 || col >= camera.width)
    throw InvalidArgumentError("generate_ray: pixel out of bounds");
  const Vec3 pix(col + 0.5, row + 0.5, 1.0);
  Vec3 dir_cam((pix.x() - camera.intrinsics(0, 2)) / camera.intrinsics(0, 0),
               (pix.y() - camera.intrinsics(1, 2)) / camera.intrinsics(1, 1), 1.0);
  Ray ray;
  ray.origin = camera.center();
  ray.direction = (camera.rotation.transpose() * dir_cam).normalized();
  return ray;
}

static json mat3_to_json(const Mat3& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

static Mat3 mat3_from_json(const json& j) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = j.at(i).at(c).get<double>();
  return m;
}

std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path + ": " + e.what());
  }
  std::vector<Camera> cams;
  for (const auto& jc : j) {
    Camera c;
    c.intrinsics = mat3_from_json(jc.at("K"));
    c.rotation = mat3_from_json(jc.at("R"));
    for (int i = 0; i < 3; ++i) c.translation[i] = jc.at("t").at(i).get<double>();
    c.width = jc.at("width").get<int>();
    c.height = jc.at("height").get<int>();
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

void save_cameras(const std::vector<Camera>& cameras, const std::string& path) {
  json j = json::array();
  for (const Camera& c : cameras) {
    j.push_back({{"K", mat3_to_json(c.intrinsics)},
                 {"R", mat3_to_json(c.rotation)},
                 {"t", {c.translation.x(), c.translation.y(), c.translation.z()}},
                 {"width", c.width},
                 {"height", c.height}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(1) << "\n";
}

Camera orbit_camera(double angle, double radius, double height, const Vec3& target,
                    double focal_px, int width, int height_px) {
  const Vec3 eye = target + Vec3(radius * std::sin(angle), height, radius * std::cos(angle));
  // camera looks along +z toward the target, y down-ish (image rows grow down)
  Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitY()).normalized();
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  Vec3 down = forward.cross(right).normalized();
  Camera cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -(cam.rotation * eye);
  cam.width = width;
  cam.height = height_px;
  cam.intrinsics = Mat3::Identity();
  cam.intrinsics(0, 0) = cam.intrinsics(1, 1) = focal_px;
  cam.intrinsics(0, 2) = width / 2.0;
  cam.intrinsics(1, 2) = height_px / 2.0;
  return cam;
}

}  // namespace anif
