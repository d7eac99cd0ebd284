// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "anif/render.hpp"
#include "anif/synthdata.hpp"
#include "test_util.hpp"

using namespace anif;

namespace {

Camera simple_camera(int size = 64) {
  Camera cam;
  cam.width = cam.height = size;
  cam.intrinsics = Mat3::Identity();
  cam.intrinsics(0, 0) = cam.intrinsics(1, 1) = 80.0;
  cam.intrinsics(0, 2) = size / 2.0;
  cam.intrinsics(1, 2) = size / 2.0;
  return cam;
}

Model tiny_model(Variant variant, int frames = 2) {
  CapsuleBodySpec spec = CapsuleBodySpec::humanoid();
  spec.resolution = 4;
  SkinnedTemplate body = build_capsule_body(spec);
  ModelConfig mc;
  mc.variant = variant;
  mc.frames = frames;
  mc.init_seed = 7;
  return build_model(mc, std::move(body), Pose::rest(24));
}

}  // namespace

TEST_CASE("generate_ray: principal point goes straight down the axis") {
  Camera cam = simple_camera();
  // pixel whose center is the principal point: (31,31) center = (31.5,31.5)
  cam.intrinsics(0, 2) = 31.5;
  cam.intrinsics(1, 2) = 31.5;
  Ray ray = generate_ray(cam, 31, 31);
  CHECK((ray.direction - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK(ray.origin.norm() == 0.0);
  CHECK_THROWS_AS(generate_ray(cam, -1, 0), InvalidArgumentError);
  CHECK_THROWS_AS(generate_ray(cam, 0, 64), InvalidArgumentError);
}

TEST_CASE("generate_ray: unit length and reprojection round trip") {
  Camera cam = orbit_camera(0.7, 2.5, 0.4, Vec3(0, 0.9, 0), 170, 128, 128);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const int row = rng.uniform_int(128), col = rng.uniform_int(128);
    Ray ray = generate_ray(cam, row, col);
    CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-12);
    const Vec3 p = ray.origin + rng.uniform(0.5, 4.0) * ray.direction;
    double u, v;
    REQUIRE(cam.project(p, u, v));
    CHECK(std::abs(u - (col + 0.5)) < 0.5);
    CHECK(std::abs(v - (row + 0.5)) < 0.5);
  }
}

TEST_CASE("ray_aabb_bounds: pinned interval and parallel miss") {
  Aabb box{Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)};
  auto hit = ray_aabb_bounds({Vec3(-2, 0, 0), Vec3(1, 0, 0)}, box);
  REQUIRE(hit.has_value());
  CHECK(hit->near == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(hit->far == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(!ray_aabb_bounds({Vec3(-2, 0.7, 0), Vec3(1, 0, 0)}, box).has_value());
  // origin inside: near clamps to 1e-3
  auto inside = ray_aabb_bounds({Vec3(0, 0, 0), Vec3(0, 0, 1)}, box);
  REQUIRE(inside.has_value());
  CHECK(inside->near == 1e-3);
}

TEST_CASE("ray_aabb_bounds: agrees with a dense marching oracle") {
  Aabb box{Vec3(-0.4, -0.7, -0.3), Vec3(0.5, 0.6, 0.8)};
  Rng rng(9);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    Vec3 origin(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    auto result = ray_aabb_bounds({origin, dir}, box);
    if (result && result->far - result->near < 1e-3) continue;  // tangent skims
    bool oracle_hit = false;
    for (double t = 1e-3; t < 12.0; t += 2e-3) {
      if (box.contains(origin + t * dir)) {
        oracle_hit = true;
        break;
      }
    }
    CHECK(result.has_value() == oracle_hit);
    ++checked;
  }
  CHECK(checked > 9000);
}

TEST_CASE("stratified_samples: bins, defaults, golden reproducibility") {
  CHECK(kDefaultSamplesPerRay == 64);
  Rng rng(17);
  RaySamples s = stratified_samples(1.0, 3.0, 64, rng);
  const double bin = 2.0 / 64;
  for (int k = 0; k < 64; ++k) {
    CHECK(s.t[k] >= 1.0 + k * bin);
    CHECK(s.t[k] < 1.0 + (k + 1) * bin);
    if (k + 1 < 64) CHECK(s.delta[k] == s.t[k + 1] - s.t[k]);
  }
  CHECK(s.delta[63] == bin);
  Rng rng2(17);
  RaySamples s2 = stratified_samples(1.0, 3.0, 64, rng2);
  CHECK((s.t - s2.t).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(stratified_samples(2.0, 1.0, 8, rng), InvalidArgumentError);
  CHECK_THROWS_AS(stratified_samples(1.0, 2.0, 0, rng), InvalidArgumentError);
}

TEST_CASE("composite: trivial cases") {
  Vec zero = Vec::Zero(5);
  Mat colors = Mat::Constant(5, 3, 0.7);
  Vec delta = Vec::Constant(5, 0.1);
  auto [rgb0, alpha0] = composite(zero, colors, delta);
  CHECK(rgb0.norm() == 0.0);
  CHECK(alpha0 == 0.0);

  Vec opaque = Vec::Zero(5);
  opaque[0] = 500.0;  // sigma*delta = 50
  Mat c2 = Mat::Zero(5, 3);
  c2.row(0) << 0.2, 0.4, 0.6;
  auto [rgb1, alpha1] = composite(opaque, c2, delta);
  CHECK((rgb1 - Vec3(0.2, 0.4, 0.6)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(alpha1 - 1.0) < 1e-9);

  Vec neg = Vec::Constant(5, -0.1);
  CHECK_THROWS_AS(composite(neg, colors, delta), InvalidArgumentError);
}

TEST_CASE("composite: weights are a partition of 1 - transmittance") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 32;
    Vec sigma(n), delta(n);
    Mat colors(n, 3);
    for (int k = 0; k < n; ++k) {
      sigma[k] = rng.uniform(0, 5);
      delta[k] = rng.uniform(0.01, 0.1);
      colors.row(k).setConstant(1.0);  // C equals the weight sum
    }
    auto [rgb, alpha] = composite(sigma, colors, delta);
    CHECK(rgb.x() >= 0.0);
    CHECK(rgb.x() <= 1.0 + 1e-12);
    CHECK(std::abs(rgb.x() - alpha) < 1e-12);
  }
}

TEST_CASE("composite: appending zero-density samples changes nothing") {
  Rng rng(29);
  const int n = 16;
  Vec sigma(n), delta(n);
  Mat colors(n, 3);
  for (int k = 0; k < n; ++k) {
    sigma[k] = rng.uniform(0, 3);
    delta[k] = rng.uniform(0.01, 0.1);
    colors.row(k) << rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1);
  }
  auto [rgb, alpha] = composite(sigma, colors, delta);
  Vec sigma2(n + 4);
  sigma2 << sigma, Vec::Zero(4);
  Vec delta2(n + 4);
  delta2 << delta, Vec::Constant(4, 0.05);
  Mat colors2(n + 4, 3);
  colors2 << colors, Mat::Constant(4, 3, 0.9);
  auto [rgb2, alpha2] = composite(sigma2, colors2, delta2);
  CHECK((rgb - rgb2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(alpha == alpha2);
}

TEST_CASE("composite: converges to the analytic transmittance integral") {
  // homogeneous medium: C -> c (1 - exp(-sigma L)), empirical order >= 0.9
  const double sigma_v = 2.1, t_near = 0.5, t_far = 2.0;
  const Vec3 c(0.3, 0.6, 0.9);
  const double L = t_far - t_near;
  const Vec3 expected = c * (1.0 - std::exp(-sigma_v * L));
  std::vector<double> errs;
  for (int n : {64, 128, 256, 512, 1024}) {
    double err_acc = 0.0;
    const int seeds = 48;
    for (int seed = 0; seed < seeds; ++seed) {
      Rng rng(100 + seed);
      RaySamples s = stratified_samples(t_near, t_far, n, rng);
      Mat colors(n, 3);
      colors.rowwise() = c.transpose();
      auto [rgb, alpha] = composite(Vec::Constant(n, sigma_v), colors, s.delta);
      err_acc += (rgb - expected).norm();
    }
    errs.push_back(err_acc / seeds);
  }
  CHECK(errs.back() < 1e-3);
  // least-squares slope of log2(err) against the doubling index
  double sx = 0, sy = 0, sxy = 0, sxx = 0;
  const int m = static_cast<int>(errs.size());
  for (int i = 0; i < m; ++i) {
    sx += i;
    sy += std::log2(errs[i]);
    sxy += i * std::log2(errs[i]);
    sxx += i * i;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(-slope >= 0.9);
}

TEST_CASE("render_pixel: miss is exact black with a large min-sdf") {
  Model model = tiny_model(Variant::SdfPdf);
  FrameContext ctx = model.frame_context(Pose::rest(24));
  Rng rng(31);
  // a ray pointing away from the body box
  Ray ray{Vec3(0, 0.9, 3.0), Vec3(0, 0, 1)};
  PixelResult res = render_pixel(model, ctx, 0, ray, 16, rng);
  CHECK(res.rgb.norm() == 0.0);
  CHECK(res.alpha == 0.0);
  CHECK(res.min_geometry == kMissMinGeometry);
}

TEST_CASE("render_pixel: untrained density model renders near black") {
  Model model = tiny_model(Variant::NerfPdf);
  // force the density head far negative: softplus(raw) ~ 0 everywhere
  Mlp& net = model.field.geometry_net();
  net.bias(net.layer_count() - 1).value(0, 0) = -40.0;
  FrameContext ctx = model.frame_context(Pose::rest(24));
  Rng rng(37);
  Ray ray{Vec3(0, 0.9, 3.0), Vec3(0, 0, -1)};
  PixelResult res = render_pixel(model, ctx, 0, ray, 64, rng);
  CHECK(res.alpha < 1e-6);
  CHECK(res.rgb.norm() < 1e-6);
}

TEST_CASE("render_image: independent of thread count, deterministic") {
  Model model = tiny_model(Variant::NerfPdf);
  FrameContext ctx = model.frame_context(Pose::rest(24));
  Camera cam = orbit_camera(0.3, 2.6, 0.0, Vec3(0, 0.9, 0), 40, 32, 32);
  Image a = render_image(model, ctx, 0, cam, 8, 99, 1);
  Image b = render_image(model, ctx, 0, cam, 8, 99, 2);
  REQUIRE(a.data.size() == b.data.size());
  for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
  Image c = render_image(model, ctx, 0, cam, 8, 99, 1);
  for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == c.data[i]);
}

TEST_CASE("png io: quantized round trip") {
  test::TempDir dir("anif_png");
  Image img(7, 5);
  Rng rng(41);
  for (auto& v : img.data) v = rng.uniform();
  save_png(img, dir.path + "/t.png");
  Image back = load_png(dir.path + "/t.png");
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 255.0 + 1e-12);
  MaskImage mask(7, 5);
  mask.at(2, 3) = 1;
  mask.at(4, 6) = 1;
  save_mask_png(mask, dir.path + "/m.png");
  MaskImage mback = load_mask_png(dir.path + "/m.png");
  CHECK(mback.data == mask.data);
}
