// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "anif/common.hpp"

namespace anif {

// Pinhole camera. R, t map world to camera; pixel (row, col) centers sit at
// (col + 0.5, row + 0.5) in image coordinates.
struct Camera {
  Mat3 intrinsics = Mat3::Identity();        // K
  Mat3 rotation = Mat3::Identity();          // world-to-camera R
  Vec3 translation = Vec3::Zero();           // world-to-camera t
  int width = 0;
  int height = 0;

  void validate() const;
  Vec3 center() const { return -(rotation.transpose() * translation); }
  // Continuous image coordinates (u, v) in pixels plus camera-space depth.
  // Returns false when the point lies at or behind the camera plane.
  bool project(const Vec3& p, double& u, double& v, double* depth = nullptr) const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length
};

Ray generate_ray(const Camera& camera, int row, int col);

// cameras.json: array of {"K": 3x3, "R": 3x3, "t": [3], "width", "height"}
std::vector<Camera> load_cameras(const std::string& path);
void save_cameras(const std::vector<Camera>& cameras, const std::string& path);

// A camera on a circle of given radius and height, aimed at `target`.
Camera orbit_camera(double angle, double radius, double height, const Vec3& target,
                    double focal_px, int width, int height_px);

}  // namespace anif
