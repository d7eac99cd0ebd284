// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/render.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace anif {

std::optional<RayInterval> ray_aabb_bounds(const Ray& ray, const Aabb& box) {
  double t0 = 1e-3;  // never sample at or behind the origin
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (std::abs(d) < 1e-15) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    double ta = (box.min[a] - o) / d;
    double tb = (box.max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (!(t1 > t0)) return std::nullopt;
  return RayInterval{t0, t1};
}

RaySamples stratified_samples(double near, double far, int n, Rng& rng) {
  if (!(near < far)) throw InvalidArgumentError("stratified_samples: near must be < far");
  if (n < 1) throw InvalidArgumentError("stratified_samples: need at least one sample");
  const double bin = (far - near) / n;
  RaySamples s;
  s.t.resize(n);
  s.delta.resize(n);
  for (int k = 0; k < n; ++k) s.t[k] = near + (k + rng.uniform()) * bin;
  for (int k = 0; k + 1 < n; ++k) s.delta[k] = s.t[k + 1] - s.t[k];
  s.delta[n - 1] = bin;  // cap instead of an unbounded last interval
  return s;
}

std::pair<Vec3, double> composite(const Vec& sigmas, const Mat& colors, const Vec& deltas) {
  if (sigmas.size() != colors.rows() || sigmas.size() != deltas.size())
    throw InvalidArgumentError("composite: length mismatch");
  if ((sigmas.array() < 0.0).any()) throw InvalidArgumentError("composite: negative density");
  if ((deltas.array() <= 0.0).any()) throw InvalidArgumentError("composite: non-positive delta");
  double transmittance = 1.0;
  Vec3 rgb = Vec3::Zero();
  for (Eigen::Index k = 0; k < sigmas.size(); ++k) {
    const double alpha = 1.0 - std::exp(-sigmas[k] * deltas[k]);
    rgb += transmittance * alpha * colors.row(k).transpose();
    transmittance *= 1.0 - alpha;
  }
  return {rgb, 1.0 - transmittance};
}

RayBundle make_ray_bundle(const std::vector<Ray>& rays, const Aabb& box, int samples_per_ray,
                          Rng& rng) {
  RayBundle b;
  b.rays = rays;
  b.hit.resize(rays.size(), 0);
  b.hit_index.resize(rays.size(), -1);
  b.offsets->push_back(0);
  std::vector<RaySamples> samples;
  samples.reserve(rays.size());
  int total = 0;
  for (size_t r = 0; r < rays.size(); ++r) {
    auto interval = ray_aabb_bounds(rays[r], box);
    if (!interval) continue;
    b.hit[r] = 1;
    b.hit_index[r] = static_cast<int>(samples.size());
    samples.push_back(stratified_samples(interval->near, interval->far, samples_per_ray, rng));
    total += samples_per_ray;
    b.offsets->push_back(total);
  }
  b.points.resize(total, 3);
  b.dirs.resize(total, 3);
  b.deltas.resize(total);
  int row = 0;
  for (size_t r = 0; r < rays.size(); ++r) {
    if (!b.hit[r]) continue;
    const RaySamples& s = samples[b.hit_index[r]];
    for (Eigen::Index k = 0; k < s.t.size(); ++k, ++row) {
      b.points.row(row) = (rays[r].origin + s.t[k] * rays[r].direction).transpose();
      b.dirs.row(row) = rays[r].direction.transpose();
      b.deltas[row] = s.delta[k];
    }
  }
  return b;
}

BatchRender render_batch(Graph& g, const RenderSetup& setup, const RayBundle& bundle) {
  BatchRender out;
  if (bundle.hit_count() == 0)
    throw InvalidArgumentError("render_batch: bundle has no rays inside the box");
  const GeometryMode mode = setup.field->mode();
  WarpResult warp = warp_points(g, *setup.deform, *setup.tmpl, *setup.ctx, setup.deform_frame,
                                bundle.points, &bundle.dirs);
  auto geom = setup.field->query_geometry(g, warp.points);
  Var density = setup.field->density(g, geom.g);
  Var min_source = geom.g;
  out.skipped_samples = static_cast<int>(warp.singular.size());
  if (!warp.singular.empty()) {
    // singular-blend samples become empty space and drop out of the min-sdf
    Mat keep = Mat::Ones(g.value(density).rows(), 1);
    for (int r : warp.singular) keep(r, 0) = 0.0;
    Mat fill = (1.0 - keep.array()).matrix() * kMissMinGeometry;
    density = g.mul(density, g.constant(keep));
    if (mode == GeometryMode::Sdf)
      min_source = g.add(g.mul(geom.g, g.constant(keep)), g.constant(fill));
  }
  Var color = setup.field->query_color(g, geom.z, warp.directions, setup.appearance_frame);
  out.pixel = g.composite(density, color, bundle.deltas, bundle.offsets);
  if (mode == GeometryMode::Sdf) out.min_geometry = g.segment_min(min_source, bundle.offsets);
  return out;
}

PixelResult render_pixel(const RenderSetup& setup, const Ray& ray, int samples_per_ray,
                         Rng& rng) {
  RayBundle bundle = make_ray_bundle({ray}, setup.ctx->box, samples_per_ray, rng);
  PixelResult res;
  if (!bundle.hit[0]) return res;  // background: black, alpha 0, min-sdf large
  Graph g;
  BatchRender batch = render_batch(g, setup, bundle);
  const Mat& pix = g.value(batch.pixel);
  res.rgb = pix.block<1, 3>(0, 0).transpose();
  res.alpha = pix(0, 3);
  res.skipped = batch.skipped_samples;
  if (setup.field->mode() == GeometryMode::Sdf)
    res.min_geometry = g.value(batch.min_geometry)(0, 0);
  return res;
}

PixelResult render_pixel(const Model& model, const FrameContext& ctx, int frame, const Ray& ray,
                         int samples_per_ray, Rng& rng) {
  return render_pixel(RenderSetup::of(model, ctx, frame), ray, samples_per_ray, rng);
}

Image render_image(const Model& model, const FrameContext& ctx, int frame, const Camera& camera,
                   int samples_per_ray, uint64_t seed, int threads) {
  return render_image(RenderSetup::of(model, ctx, frame), camera, samples_per_ray, seed, threads);
}

Image render_image(const RenderSetup& setup, const Camera& camera, int samples_per_ray,
                   uint64_t seed, int threads) {
  camera.validate();
  Image img(camera.width, camera.height);
  const int rows_per_chunk = 8;
  const int chunks = (camera.height + rows_per_chunk - 1) / rows_per_chunk;
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      const int row0 = c * rows_per_chunk;
      const int row1 = std::min(row0 + rows_per_chunk, camera.height);
      std::vector<Ray> rays;
      std::vector<std::pair<int, int>> pix;
      Rng chunk_rng(0);
      // assemble samples with per-pixel streams so chunking is irrelevant
      RayBundle bundle;
      bundle.offsets->push_back(0);
      std::vector<RaySamples> samples;
      int total = 0;
      for (int row = row0; row < row1; ++row)
        for (int col = 0; col < camera.width; ++col) {
          Ray ray = generate_ray(camera, row, col);
          auto interval = ray_aabb_bounds(ray, setup.ctx->box);
          bundle.rays.push_back(ray);
          pix.emplace_back(row, col);
          if (!interval) {
            bundle.hit.push_back(0);
            bundle.hit_index.push_back(-1);
            continue;
          }
          Rng ray_rng(splitmix64(seed ^ splitmix64(static_cast<uint64_t>(row) * 1315423911u +
                                                   static_cast<uint64_t>(col))));
          bundle.hit.push_back(1);
          bundle.hit_index.push_back(static_cast<int>(samples.size()));
          samples.push_back(
              stratified_samples(interval->near, interval->far, samples_per_ray, ray_rng));
          total += samples_per_ray;
          bundle.offsets->push_back(total);
        }
      if (total > 0) {
        bundle.points.resize(total, 3);
        bundle.dirs.resize(total, 3);
        bundle.deltas.resize(total);
        int sample_row = 0;
        for (size_t r = 0; r < bundle.rays.size(); ++r) {
          if (!bundle.hit[r]) continue;
          const RaySamples& s = samples[bundle.hit_index[r]];
          for (Eigen::Index k = 0; k < s.t.size(); ++k, ++sample_row) {
            bundle.points.row(sample_row) =
                (bundle.rays[r].origin + s.t[k] * bundle.rays[r].direction).transpose();
            bundle.dirs.row(sample_row) = bundle.rays[r].direction.transpose();
            bundle.deltas[sample_row] = s.delta[k];
          }
        }
        Graph g;
        BatchRender batch = render_batch(g, setup, bundle);
        const Mat& pixv = g.value(batch.pixel);
        for (size_t r = 0; r < bundle.rays.size(); ++r) {
          if (!bundle.hit[r]) continue;
          const int h = bundle.hit_index[r];
          for (int ch = 0; ch < 3; ++ch)
            img.at(pix[r].first, pix[r].second, ch) = pixv(h, ch);
        }
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return img;
}

}  // namespace anif
