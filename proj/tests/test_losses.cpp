// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "anif/losses.hpp"
#include "test_util.hpp"

using namespace anif;
using anif::test::random_mat;

TEST_CASE("rgb_loss: zero at identity, 3-4-5 norm, oracle match") {
  Rng rng(3);
  Mat batch = random_mat(rng, 10, 3);
  CHECK(rgb_loss(batch, batch) == 0.0);

  Mat a = Mat::Zero(1, 3), b(1, 3);
  b << 0.3, 0.0, 0.4;
  CHECK(rgb_loss(a, b) == doctest::Approx(0.5).epsilon(1e-15));

  Mat pred = random_mat(rng, 25, 3), obs = random_mat(rng, 25, 3);
  double naive = 0.0;
  for (int i = 0; i < 25; ++i) {
    double sq = 0;
    for (int c = 0; c < 3; ++c) sq += (pred(i, c) - obs(i, c)) * (pred(i, c) - obs(i, c));
    naive += std::sqrt(sq);
  }
  naive /= 25;
  CHECK(rgb_loss(pred, obs) == doctest::Approx(naive).epsilon(1e-14));
  Graph g;
  CHECK(g.value(rgb_loss(g, g.constant(pred), obs))(0, 0) ==
        doctest::Approx(naive).epsilon(1e-14));
}

TEST_CASE("rho_schedule: doubles every 10k up to 5 times") {
  CHECK(rho_schedule(0) == 50.0);
  CHECK(rho_schedule(9999) == 50.0);
  CHECK(rho_schedule(10000) == 100.0);
  CHECK(rho_schedule(20000) == 200.0);
  CHECK(rho_schedule(50000) == 1600.0);
  CHECK(rho_schedule(999999) == 1600.0);
  CHECK_THROWS_AS(rho_schedule(-1), InvalidArgumentError);
}

TEST_CASE("mask_loss: pinned values") {
  CHECK(mask_loss(Vec::Zero(1), Vec::Ones(1), 50.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(mask_loss(Vec::Constant(1, 10.0), Vec::Zero(1), 50.0) < 1e-6);
  // sigmoid(-5): loss = -log(sigmoid(-5)) ~ 5.00672
  CHECK(mask_loss(Vec::Constant(1, 0.1), Vec::Ones(1), 50.0) ==
        doctest::Approx(5.006715348489118).epsilon(1e-9));
  Vec bad_mask = Vec::Constant(1, 0.5);
  CHECK_THROWS_AS(mask_loss(Vec::Zero(1), bad_mask, 50.0), InvalidArgumentError);
}

TEST_CASE("mask_loss: monotone in min_sdf, graph agrees with plain") {
  Rng rng(7);
  double prev1 = -1, prev0 = 1e9;
  for (double s = -0.2; s <= 0.2; s += 0.01) {
    const double l1 = mask_loss(Vec::Constant(1, s), Vec::Ones(1), 50.0);
    const double l0 = mask_loss(Vec::Constant(1, s), Vec::Zero(1), 50.0);
    CHECK(l1 >= prev1 - 1e-12);  // increasing when mask = 1
    CHECK(l0 <= prev0 + 1e-12);  // decreasing when mask = 0
    prev1 = l1;
    prev0 = l0;
  }
  Vec s = random_mat(rng, 20, 1).col(0);
  Vec m(20);
  for (int i = 0; i < 20; ++i) m[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  Graph g;
  CHECK(g.value(mask_loss(g, g.constant(Mat(s)), m, 100.0))(0, 0) ==
        doctest::Approx(mask_loss(s, m, 100.0)).epsilon(1e-13));
}

TEST_CASE("eikonal_penalty: analytic fields") {
  // stencil columns [x+, x-, y+, y-, z+, z-] built from closed-form fields
  const double h = kEikonalStep;
  Rng rng(11);
  const Vec3 n = Vec3(0.3, -0.5, 0.8).normalized();
  auto stencil_for = [&](const std::function<double(const Vec3&)>& f, const Mat& pts) {
    Mat s(pts.rows(), 6);
    for (int i = 0; i < pts.rows(); ++i) {
      const Vec3 p = pts.row(i).transpose();
      int c = 0;
      for (int a = 0; a < 3; ++a)
        for (double sign : {1.0, -1.0}) {
          Vec3 q = p;
          q[a] += sign * h;
          s(i, c++) = f(q);
        }
    }
    return s;
  };
  Mat pts = random_mat(rng, 50, 3, 2.0);

  // plane SDF: n . x - d has exact unit gradient
  Graph g1;
  Var loss1 = eikonal_penalty(
      g1, g1.constant(stencil_for([&](const Vec3& p) { return n.dot(p) - 0.3; }, pts)), h);
  CHECK(g1.value(loss1)(0, 0) < 1e-8);

  // doubled field: (2 - 1)^2 = 1 per point
  Graph g2;
  Var loss2 = eikonal_penalty(
      g2, g2.constant(stencil_for([&](const Vec3& p) { return 2.0 * n.dot(p); }, pts)), h);
  CHECK(g2.value(loss2)(0, 0) == doctest::Approx(1.0).epsilon(1e-10));

  // sphere SDF away from the center: unit gradient up to FD error
  Mat off_center(30, 3);
  for (int i = 0; i < 30; ++i) {
    Vec3 p(rng.normal(), rng.normal(), rng.normal());
    off_center.row(i) = (p.normalized() * rng.uniform(0.5, 2.0)).transpose();
  }
  Graph g3;
  Var loss3 = eikonal_penalty(
      g3,
      g3.constant(stencil_for([&](const Vec3& p) { return p.norm() - 0.7; }, off_center)), h);
  CHECK(g3.value(loss3)(0, 0) < 1e-6);
}

TEST_CASE("consistency_loss: identity, disjoint one-hots, oracle") {
  Rng rng(13);
  Mat w = random_mat(rng, 8, 5).cwiseAbs();
  for (int i = 0; i < 8; ++i) w.row(i) /= w.row(i).sum();
  CHECK(consistency_loss(w, w) == 0.0);

  Mat e1 = Mat::Zero(4, 6), e2 = Mat::Zero(4, 6);
  e1.col(0).setOnes();
  e2.col(1).setOnes();
  CHECK(consistency_loss(e1, e2) == doctest::Approx(2.0).epsilon(1e-15));

  Mat a = random_mat(rng, 12, 5).cwiseAbs(), b = random_mat(rng, 12, 5).cwiseAbs();
  for (int i = 0; i < 12; ++i) {
    a.row(i) /= a.row(i).sum();
    b.row(i) /= b.row(i).sum();
  }
  double naive = 0;
  for (int i = 0; i < 12; ++i)
    for (int c = 0; c < 5; ++c) naive += std::abs(a(i, c) - b(i, c));
  naive /= 12;
  CHECK(consistency_loss(a, b) == doctest::Approx(naive).epsilon(1e-14));
  Graph g;
  CHECK(g.value(consistency_loss(g, g.constant(a), g.constant(b)))(0, 0) ==
        doctest::Approx(naive).epsilon(1e-14));
}

TEST_CASE("displacement_reg: zero, unit vector, oracle") {
  CHECK(displacement_reg(Mat::Zero(7, 3)) == 0.0);
  Mat one(1, 3);
  one << 0.0, 0.6, 0.8;
  CHECK(displacement_reg(one) == doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(17);
  Mat d = random_mat(rng, 9, 3);
  double naive = 0;
  for (int i = 0; i < 9; ++i) naive += d.row(i).norm();
  CHECK(displacement_reg(d) == doctest::Approx(naive / 9).epsilon(1e-14));
  Graph g;
  CHECK(g.value(displacement_reg(g, g.constant(d)))(0, 0) ==
        doctest::Approx(naive / 9).epsilon(1e-14));
}

TEST_CASE("total_loss: declared combinations and missing terms") {
  LossReport parts;
  parts.rgb = 1.0;
  parts.dx = 2.0;
  CHECK(total_loss(Variant::NerfPdf, parts) == doctest::Approx(1.02).epsilon(1e-15));

  LossReport sdf;
  sdf.rgb = sdf.mask = sdf.eikonal = sdf.dx = 1.0;
  CHECK(total_loss(Variant::SdfPdf, sdf) == doctest::Approx(2.02).epsilon(1e-15));

  LossReport nbw;
  nbw.rgb = 0.0;
  nbw.nsf = 0.0;
  CHECK(total_loss(Variant::NerfNbw, nbw) == 0.0);

  LossReport incomplete;
  incomplete.rgb = 1.0;
  CHECK_THROWS_AS(total_loss(Variant::SdfPdf, incomplete), InvalidStateError);
  CHECK_THROWS_AS(total_loss(Variant::NerfNbw, incomplete), InvalidStateError);
}

TEST_CASE("losses are non-negative on random inputs") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Mat pred = random_mat(rng, 6, 3), obs = random_mat(rng, 6, 3);
    CHECK(rgb_loss(pred, obs) >= 0.0);
    Vec s = random_mat(rng, 6, 1).col(0);
    Vec m(6);
    for (int i = 0; i < 6; ++i) m[i] = rng.uniform() < 0.5 ? 0 : 1;
    CHECK(mask_loss(s, m, rho_schedule(trial * 7000)) >= 0.0);
    CHECK(displacement_reg(random_mat(rng, 6, 3)) >= 0.0);
  }
}

TEST_CASE("gradcheck: loss terms differentiate through their graphs") {
  Rng rng(29);
  ParamStore store;
  Parameter& p = store.create("p", 6, 3);
  p.value = random_mat(rng, 6, 3, 0.5);
  Mat obs = random_mat(rng, 6, 3);
  auto res_rgb = test::check_param_gradients(
      store, [&](Graph& g) { return rgb_loss(g, g.sigmoid(g.param(p)), obs); }, rng, 18);
  CHECK(res_rgb.ok);

  ParamStore store2;
  Parameter& s = store2.create("s", 6, 1);
  s.value = random_mat(rng, 6, 1, 0.05);
  Vec m(6);
  for (int i = 0; i < 6; ++i) m[i] = i % 2;
  auto res_mask = test::check_param_gradients(
      store2, [&](Graph& g) { return mask_loss(g, g.param(s), m, 50.0); }, rng, 6);
  CHECK(res_mask.ok);

  ParamStore store3;
  Parameter& w = store3.create("w", 6, 4);
  w.value = random_mat(rng, 6, 4, 0.5).array() + 1.0;
  Mat target = random_mat(rng, 6, 4).cwiseAbs();
  auto res_nsf = test::check_param_gradients(
      store3,
      [&](Graph& g) {
        Var rows = g.div_col(g.param(w), g.row_sum(g.param(w)));
        return consistency_loss(g, rows, g.constant(target));
      },
      rng, 20);
  CHECK(res_nsf.ok);

  ParamStore store4;
  Parameter& d = store4.create("d", 6, 3);
  d.value = random_mat(rng, 6, 3, 0.5);
  auto res_dx = test::check_param_gradients(
      store4, [&](Graph& g) { return displacement_reg(g, g.param(d)); }, rng, 18);
  CHECK(res_dx.ok);
}
