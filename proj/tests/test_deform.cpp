// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "anif/deform.hpp"
#include "test_util.hpp"

using namespace anif;
using anif::test::random_mat;

namespace {

PartTransforms random_transforms(Rng& rng, int k, double angle = 1.0) {
  PartTransforms g;
  for (int i = 0; i < k; ++i) {
    Vec3 w(rng.uniform(-angle, angle), rng.uniform(-angle, angle), rng.uniform(-angle, angle));
    g.parts.push_back(
        {rodrigues(w), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))});
  }
  return g;
}

Vec random_convex(Rng& rng, int k) {
  Vec w(k);
  for (int i = 0; i < k; ++i) w[i] = rng.uniform(0.01, 1.0);
  return w / w.sum();
}

// single-layer net with zero weights: output is exactly the bias row
Mlp constant_net(ParamStore& store, const std::string& name, int in, const Vec& bias) {
  MlpConfig cfg;
  cfg.input_dim = in;
  cfg.output_dim = static_cast<int>(bias.size());
  cfg.layers = 1;
  Mlp net(store, name, cfg);
  net.weight(0).value.setZero();
  net.bias(0).value = bias.transpose();
  return net;
}

}  // namespace

TEST_CASE("blend_transforms: one-hot and identity cases") {
  Rng rng(3);
  PartTransforms g = random_transforms(rng, 4);
  Vec onehot = Vec::Zero(4);
  onehot[2] = 1.0;
  WeightedTransform wt = blend_transforms(onehot, g);
  CHECK((wt.rotation - g.parts[2].rotation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((wt.translation - g.parts[2].translation).cwiseAbs().maxCoeff() == 0.0);

  PartTransforms ident;
  ident.parts.resize(4);
  WeightedTransform wi = blend_transforms(random_convex(rng, 4), ident);
  CHECK((wi.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(wi.translation.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("blend_transforms: matches the homogeneous summation oracle") {
  Rng rng(5);
  PartTransforms g = random_transforms(rng, 6);
  Vec w = random_convex(rng, 6);
  WeightedTransform wt = blend_transforms(w, g);
  Eigen::Matrix4d oracle = Eigen::Matrix4d::Zero();
  for (int p = 0; p < 6; ++p) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    h.topLeftCorner<3, 3>() = g.parts[p].rotation;
    h.topRightCorner<3, 1>() = g.parts[p].translation;
    oracle += w[p] * h;
  }
  CHECK((wt.rotation - oracle.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((wt.translation - oracle.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lbs_inverse: identity, round trip, rigid case, singular error") {
  Rng rng(7);
  PartTransforms ident;
  ident.parts.resize(3);
  const Vec3 x(0.4, -0.2, 0.9);
  CHECK((lbs_inverse(x, random_convex(rng, 3), ident) - x).norm() == 0.0);

  PartTransforms g = random_transforms(rng, 3);
  Vec w = random_convex(rng, 3);
  WeightedTransform wt = blend_transforms(w, g);
  const Vec3 observed = wt.rotation * x + wt.translation;  // forward skinning
  CHECK((lbs_inverse(observed, w, g) - x).norm() < 1e-9);

  Vec onehot = Vec::Zero(3);
  onehot[1] = 1.0;
  const Vec3 obs1 = g.parts[1].apply(x);
  CHECK((lbs_inverse(obs1, onehot, g) -
         g.parts[1].inverse().apply(obs1))
            .norm() < 1e-15);

  PartTransforms zero;
  zero.parts.resize(3);
  for (auto& part : zero.parts) part.rotation.setZero();
  CHECK_THROWS_AS(lbs_inverse(x, random_convex(rng, 3), zero), SingularBlendError);
}

TEST_CASE("lbs round trip over many random triples") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    PartTransforms g = random_transforms(rng, 5, 0.9);
    Vec w = random_convex(rng, 5);
    Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    WeightedTransform wt = blend_transforms(w, g);
    CHECK((lbs_inverse(wt.rotation * x + wt.translation, w, g) - x).norm() < 1e-9);
  }
}

TEST_CASE("canonicalize_direction: identity, pure rotation, blended oracle") {
  const Vec3 d = Vec3(0.4, 0.3, -0.6).normalized();
  WeightedTransform ident{Mat3::Identity(), Vec3::Zero()};
  CHECK((canonicalize_direction(d, ident) - d).norm() < 1e-15);

  Mat3 r = rodrigues(Vec3(0.2, -0.7, 0.4));
  WeightedTransform rot{r, Vec3(1, 2, 3)};
  CHECK((canonicalize_direction(d, rot) - r * d).norm() < 1e-12);

  Rng rng(13);
  Mat3 r2 = rodrigues(Vec3(-0.3, 0.5, 0.1));
  WeightedTransform blend{0.3 * r + 0.7 * r2, Vec3::Zero()};
  Vec3 expect = blend.rotation * d;
  expect.normalize();
  CHECK((canonicalize_direction(d, blend) - expect).norm() < 1e-12);

  CHECK_THROWS_AS(canonicalize_direction(Vec3(1, 1, 0), ident), InvalidArgumentError);
  WeightedTransform zero{Mat3::Zero(), Vec3::Zero()};
  CHECK_THROWS_AS(canonicalize_direction(d, zero), DegenerateDirectionError);
}

TEST_CASE("nbw_weights: zero residual returns the template weights") {
  ParamStore store;
  Vec zero_bias = Vec::Zero(4);
  Mlp net = constant_net(store, "resid", encoding_dim(3, kDeformXyzFrequencies) + 8, zero_bias);
  Parameter& psi = store.create("psi", 2, 8);
  Vec w_s(4);
  w_s << 0.1, 0.2, 0.3, 0.4;
  Vec w = nbw_weights(Vec3(0.3, 0.1, -0.2), net, psi, 0, w_s);
  CHECK((w - w_s).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("nbw_weights: norm cancels a doubling residual") {
  ParamStore store;
  Vec w_s(3);
  w_s << 0.5, 0.25, 0.25;
  Mlp net = constant_net(store, "resid", encoding_dim(3, kDeformXyzFrequencies) + 8, w_s);
  Parameter& psi = store.create("psi", 1, 8);
  Vec w = nbw_weights(Vec3(0, 0, 0), net, psi, 0, w_s);
  CHECK((w - w_s).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("nbw_weights: matches the direct formula, sums to one") {
  Rng rng(17);
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = encoding_dim(3, kDeformXyzFrequencies) + 8;
  cfg.output_dim = 5;
  cfg.hidden_width = 12;
  cfg.layers = 3;
  cfg.hidden_activation = Activation::Relu;
  Mlp net(store, "resid", cfg);
  net.init_default(rng);
  Parameter& psi = store.create("psi", 2, 8);
  psi.value = random_mat(rng, 2, 8);
  Vec w_s = random_convex(rng, 5);
  const Vec3 x(0.2, -0.4, 0.6);
  Vec w = nbw_weights(x, net, psi, 1, w_s);
  // direct evaluation
  Mat input(1, cfg.input_dim);
  input << positional_encoding(x.transpose(), kDeformXyzFrequencies), psi.value.row(1);
  Vec direct = (net.forward_plain(input).row(0).transpose() + w_s).cwiseMax(0.0);
  direct /= direct.sum();
  CHECK((w - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.minCoeff() >= 0.0);
}

TEST_CASE("nbw_weights: scale invariance of the normalization") {
  // norm(relu(v)) is invariant to positive scaling of v
  Rng rng(19);
  Vec v = random_mat(rng, 6, 1).col(0);
  Vec a = v.cwiseMax(0.0);
  a /= a.sum();
  Vec b = (3.7 * v).cwiseMax(0.0);
  b /= b.sum();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nbw_weights: degenerate clamped weights raise") {
  ParamStore store;
  Vec bias(2);
  bias << -5.0, -5.0;
  Mlp net = constant_net(store, "resid", encoding_dim(3, kDeformXyzFrequencies) + 8, bias);
  Parameter& psi = store.create("psi", 1, 8);
  Vec w_s(2);
  w_s << 0.5, 0.5;
  CHECK_THROWS_AS(nbw_weights(Vec3::Zero(), net, psi, 0, w_s), DegenerateWeightsError);
}

TEST_CASE("warp_pdf: zero displacement equals the plain inverse warp bitwise") {
  Rng rng(23);
  ParamStore store;
  Vec zero3 = Vec::Zero(3);
  Mlp net = constant_net(store, "disp", encoding_dim(3, kDeformXyzFrequencies) + 6, zero3);
  PartTransforms g = random_transforms(rng, 2, 0.6);
  Vec w_s = random_convex(rng, 2);
  Vec pose_flat = Vec::Zero(6);
  const Vec3 x(0.31, 0.72, -0.15);
  const Vec3 via_pdf = warp_pdf(x, net, pose_flat, w_s, g);
  const Vec3 direct = lbs_inverse(x, w_s, g);
  CHECK(via_pdf.x() == direct.x());
  CHECK(via_pdf.y() == direct.y());
  CHECK(via_pdf.z() == direct.z());
}

TEST_CASE("warp_pdf: identity pose and zero net is the identity map") {
  ParamStore store;
  Vec zero3 = Vec::Zero(3);
  Mlp net = constant_net(store, "disp", encoding_dim(3, kDeformXyzFrequencies) + 6, zero3);
  PartTransforms ident;
  ident.parts.resize(2);
  Vec w_s(2);
  w_s << 0.6, 0.4;
  const Vec3 x(0.1, 0.2, 0.3);
  CHECK((warp_pdf(x, net, Vec::Zero(6), w_s, ident) - x).norm() == 0.0);
}

TEST_CASE("warp_pdf: constant displacement shifts the inverse warp") {
  Rng rng(29);
  ParamStore store;
  Vec c(3);
  c << 0.05, -0.03, 0.09;
  Mlp net = constant_net(store, "disp", encoding_dim(3, kDeformXyzFrequencies) + 6, c);
  PartTransforms g = random_transforms(rng, 2, 0.5);
  Vec w_s = random_convex(rng, 2);
  const Vec3 x(0.4, -0.1, 0.2);
  CHECK((warp_pdf(x, net, Vec::Zero(6), w_s, g) - (lbs_inverse(x, w_s, g) + Vec3(c)))
            .norm() < 1e-15);
}

TEST_CASE("warp_nbw: composition matches its two stages") {
  Rng rng(31);
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = encoding_dim(3, kDeformXyzFrequencies) + 8;
  cfg.output_dim = 3;
  cfg.hidden_width = 10;
  cfg.layers = 2;
  cfg.hidden_activation = Activation::Relu;
  Mlp net(store, "resid", cfg);
  net.init_default(rng);
  net.init_final_layer_uniform(rng, 1e-4);
  Parameter& psi = store.create("psi", 1, 8);
  psi.value = random_mat(rng, 1, 8);
  PartTransforms g = random_transforms(rng, 3, 0.7);
  Vec w_s = random_convex(rng, 3);
  const Vec3 x(0.25, 0.5, -0.33);
  const Vec3 composed = warp_nbw(x, net, psi, 0, w_s, g);
  const Vec3 manual = lbs_inverse(x, nbw_weights(x, net, psi, 0, w_s), g);
  CHECK((composed - manual).norm() == 0.0);
}

TEST_CASE("surface round trip: posed template vertices return to canonical") {
  CapsuleBodySpec spec = CapsuleBodySpec::humanoid();
  spec.resolution = 6;
  SkinnedTemplate body = build_capsule_body(spec);
  Rng rng(37);
  Pose pose = Pose::rest(24);
  for (int j = 0; j < 24; ++j)
    for (int c = 0; c < 3; ++c) pose.rotations(j, c) = rng.uniform(-0.6, 0.6);
  PartTransforms g = part_transforms(body.skeleton, pose, Pose::rest(24));
  Mat posed = pose_mesh(body, g);
  for (int v = 0; v < body.vertex_count(); v += 7) {
    Vec3 back = lbs_inverse(posed.row(v).transpose(), body.weights.row(v).transpose(), g);
    CHECK((back - body.vertices.row(v).transpose()).norm() < 1e-6);
  }
}

TEST_CASE("warp_points: batched graph path agrees with plain warps") {
  CapsuleBodySpec spec = CapsuleBodySpec::humanoid();
  spec.resolution = 5;
  SkinnedTemplate body = build_capsule_body(spec);
  Rng rng(41);
  Pose pose = Pose::rest(24);
  for (int j : {1, 2, 16, 17})
    pose.rotations.row(j) = Vec3(rng.uniform(-.5, .5), 0, rng.uniform(-.5, .5)).transpose();
  FrameContext ctx = make_frame_context(body, pose, Pose::rest(24), 0.05);

  for (DeformVariant variant : {DeformVariant::Smpl, DeformVariant::Pdf, DeformVariant::Nbw}) {
    ParamStore store;
    DeformConfig dc;
    dc.variant = variant;
    dc.frames = 2;
    dc.parts = 24;
    DeformationModel model(store, dc);
    Rng init(43);
    model.init(init);
    Mat pts = test::random_mat(rng, 30, 3, 0.5);
    pts.col(1).array() += 0.9;
    Mat dirs(30, 3);
    for (int i = 0; i < 30; ++i) {
      Vec3 d(rng.normal(), rng.normal(), rng.normal());
      dirs.row(i) = d.normalized().transpose();
    }
    Graph g;
    WarpResult warp = warp_points(g, model, body, ctx, 1, pts, &dirs);
    REQUIRE(warp.singular.empty());
    for (int i = 0; i < 30; i += 5) {
      const Vec3 x = pts.row(i).transpose();
      Vec w_s = query_blend_weights(body, ctx.grid, x);
      Vec3 expect;
      if (variant == DeformVariant::Smpl) {
        expect = lbs_inverse(x, w_s, ctx.transforms);
      } else if (variant == DeformVariant::Pdf) {
        expect = warp_pdf(x, model.displacement_net(), ctx.pose_flat, w_s, ctx.transforms);
      } else {
        expect = warp_nbw(x, model.residual_net(), model.psi(), 1, w_s, ctx.transforms);
      }
      CHECK((g.value(warp.points).row(i).transpose() - expect).norm() < 1e-10);
      // direction: R* from the same weights, renormalized
      Vec w_used = variant == DeformVariant::Nbw
                       ? nbw_weights(x, model.residual_net(), model.psi(), 1, w_s)
                       : w_s;
      Vec3 dir_expect =
          canonicalize_direction(dirs.row(i).transpose(), blend_transforms(w_used, ctx.transforms));
      CHECK((g.value(warp.directions).row(i).transpose() - dir_expect).norm() < 1e-10);
    }
  }
}

TEST_CASE("warp gradients match finite differences") {
  // small Nbw and Pdf instances, gradients w.r.t. network parameters
  CapsuleBodySpec spec = CapsuleBodySpec::humanoid();
  spec.resolution = 4;
  SkinnedTemplate body = build_capsule_body(spec);
  Rng rng(47);
  Pose pose = Pose::rest(24);
  pose.rotations.row(16) = Vec3(0, 0, 0.5).transpose();
  pose.rotations.row(17) = Vec3(0, 0, -0.4).transpose();
  FrameContext ctx = make_frame_context(body, pose, Pose::rest(24), 0.05);
  Mat pts = test::random_mat(rng, 6, 3, 0.4);
  pts.col(1).array() += 0.9;

  for (DeformVariant variant : {DeformVariant::Nbw, DeformVariant::Pdf}) {
    ParamStore store;
    DeformConfig dc;
    dc.variant = variant;
    dc.frames = 2;
    dc.parts = 24;
    DeformationModel model(store, dc);
    Rng init(49);
    model.init(init);
    auto res = test::check_param_gradients(
        store,
        [&](Graph& g) {
          WarpResult warp = warp_points(g, model, body, ctx, 0, pts);
          return g.sum_all(g.square(warp.points));
        },
        rng, 8);
    CHECK(res.ok);
  }
}
