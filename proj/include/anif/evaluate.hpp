// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "anif/body_model.hpp"
#include "anif/camera.hpp"
#include "anif/image.hpp"

namespace anif {

struct TriMesh {
  Mat vertices;                     // meters
  Eigen::Matrix<int, -1, 3> faces;

  bool empty() const { return vertices.rows() == 0; }
  void validate() const;
  double surface_area() const;
};

using ScalarField = std::function<double(const Vec3&)>;

// Classic marching cubes with linear edge interpolation over a regular grid
// spanning `box`. Extracts the level set field(x) = iso; the inside is where
// the field is below the threshold, so signed distances mesh at iso 0 and a
// density field meshes by passing its negation (or by flipping the sign of
// the threshold comparison with `inside_below = false`).
TriMesh marching_cubes(const ScalarField& field, const Aabb& box, int resolution, double iso,
                       bool inside_below = true);

inline constexpr double kDensityMeshThreshold = 5.0;  // density-mode default

// Mean point-to-surface distance in centimeters: area-weighted samples of
// `mesh` against exact point-triangle distance to `reference`.
double p2s(const TriMesh& mesh, const TriMesh& reference, int samples, uint64_t seed = 7);

// Symmetric mean of the two directed p2s means, centimeters.
double chamfer(const TriMesh& mesh, const TriMesh& reference, int samples, uint64_t seed = 7);

// Projection of a 3D box into a camera: filled convex hull of the corner
// projections plus its enclosing pixel rectangle.
struct ProjectedBox {
  MaskImage mask;
  int col0 = 0, row0 = 0, col1 = 0, row1 = 0;  // half-open pixel rectangle

  bool empty() const { return col1 <= col0 || row1 <= row0; }
  int rect_width() const { return col1 - col0; }
  int rect_height() const { return row1 - row0; }
};
ProjectedBox project_bbox_mask(const Aabb& box, const Camera& camera);

// 10 log10(1 / MSE) over region pixels, channel-averaged, capped at 99 dB.
double psnr(const Image& a, const Image& b, const MaskImage& region);
inline constexpr double kPsnrCap = 99.0;

// Standard SSIM (11x11 Gaussian window, sigma 1.5) over a crop rectangle,
// channel-averaged. The crop must be at least 11x11.
double ssim(const Image& a, const Image& b, int col0, int row0, int col1, int row1);

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace anif
