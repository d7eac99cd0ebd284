// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>

#include "anif/camera.hpp"
#include "anif/image.hpp"
#include "anif/model.hpp"

namespace anif {

inline constexpr int kDefaultSamplesPerRay = 64;
inline constexpr double kMissMinGeometry = 1e30;

// Slab intersection clipped to [1e-3, inf). nullopt on a miss.
struct RayInterval {
  double near;
  double far;
};
std::optional<RayInterval> ray_aabb_bounds(const Ray& ray, const Aabb& box);

// One uniform draw per equal-width bin of [near, far]. delta[k] is the gap
// to the next sample; the last delta is capped at the mean bin width.
struct RaySamples {
  Vec t;      // ascending
  Vec delta;  // positive
};
RaySamples stratified_samples(double near, double far, int n, Rng& rng);

// Emission-absorption quadrature, plain version.
std::pair<Vec3, double> composite(const Vec& sigmas, const Mat& colors, const Vec& deltas);

// Rays of one frame assembled for batched rendering. Rays that miss the box
// carry no samples; hit rays own rows [offsets[r], offsets[r+1]) of the
// sample matrices registered under their hit_index.
struct RayBundle {
  std::vector<Ray> rays;
  std::vector<char> hit;
  std::vector<int> hit_index;  // per ray: composite row, or -1
  std::shared_ptr<std::vector<int>> offsets = std::make_shared<std::vector<int>>();
  Mat points;  // total samples x 3
  Mat dirs;    // total samples x 3
  Vec deltas;

  int ray_count() const { return static_cast<int>(rays.size()); }
  int hit_count() const { return static_cast<int>(offsets->size()) - 1; }
};

// Draws stratified samples per hit ray from `rng` in ray order.
RayBundle make_ray_bundle(const std::vector<Ray>& rays, const Aabb& box, int samples_per_ray,
                          Rng& rng);

struct BatchRender {
  Var pixel;         // hits x 4: rgb, accumulated alpha
  Var min_geometry;  // hits x 1 (sdf mode only)
  int skipped_samples = 0;
};

// Rendering components decoupled from Model so the animation stage can swap
// in its own deformation net and index latent tables independently.
struct RenderSetup {
  const CanonicalField* field = nullptr;
  const DeformationModel* deform = nullptr;
  const SkinnedTemplate* tmpl = nullptr;
  const FrameContext* ctx = nullptr;
  int appearance_frame = 0;  // row of the appearance code table
  int deform_frame = 0;      // row of the deformation latent table (Nbw)

  static RenderSetup of(const Model& model, const FrameContext& ctx, int frame) {
    return {&model.field, &model.deform, &model.tmpl, &ctx, frame, frame};
  }
};

// Warp, field query and quadrature for every hit ray of the bundle, on the
// graph. Singular-blend samples count as empty space and are tallied.
BatchRender render_batch(Graph& g, const RenderSetup& setup, const RayBundle& bundle);

struct PixelResult {
  Vec3 rgb = Vec3::Zero();
  double alpha = 0.0;
  double min_geometry = kMissMinGeometry;
  int skipped = 0;
};

PixelResult render_pixel(const Model& model, const FrameContext& ctx, int frame, const Ray& ray,
                         int samples_per_ray, Rng& rng);
PixelResult render_pixel(const RenderSetup& setup, const Ray& ray, int samples_per_ray, Rng& rng);

// Full image, chunked over pixels; per-pixel RNG streams keyed off `seed`
// make the result independent of the thread count.
Image render_image(const Model& model, const FrameContext& ctx, int frame, const Camera& camera,
                   int samples_per_ray, uint64_t seed, int threads);
Image render_image(const RenderSetup& setup, const Camera& camera, int samples_per_ray,
                   uint64_t seed, int threads);

}  // namespace anif
