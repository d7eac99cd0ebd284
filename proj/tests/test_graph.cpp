// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "anif/checkpoint.hpp"
#include "anif/optim.hpp"
#include "test_util.hpp"

using namespace anif;
using anif::test::check_input_gradients;
using anif::test::check_param_gradients;
using anif::test::random_mat;

TEST_CASE("graph: values computed eagerly, shapes checked") {
  Graph g;
  Var a = g.constant(Mat::Ones(2, 3));
  Var b = g.constant(2.0 * Mat::Ones(2, 3));
  CHECK(g.value(a + b).sum() == doctest::Approx(18.0));
  Var bad = g.constant(Mat::Ones(3, 2));
  CHECK_THROWS_AS(g.add(a, bad), InvalidArgumentError);
}

TEST_CASE("backward before any forward is an invalid state") {
  Graph g;
  CHECK_THROWS_AS(g.backward(Var{}), InvalidStateError);
}

TEST_CASE("backward: linear loss has exactly the coefficient gradient") {
  Rng rng(2);
  ParamStore store;
  Parameter& x = store.create("x", 4, 1);
  x.value = random_mat(rng, 4, 1);
  Mat c = random_mat(rng, 1, 4);
  Graph g;
  Var loss = g.matmul_const(g.param(x), c.transpose());
  g.backward(loss);
  CHECK((g.param_grad_or_zero(x) - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: constant loss leaves zero gradients") {
  ParamStore store;
  Parameter& x = store.create("x", 3, 3);
  x.value.setOnes();
  Graph g;
  Var p = g.param(x);
  (void)p;
  Var loss = g.constant_scalar(5.0);
  g.backward(loss);
  CHECK(g.param_grad(x) == nullptr);
  CHECK(g.param_grad_or_zero(x).cwiseAbs().maxCoeff() == 0.0);
}

namespace {

// every elementwise/structural op in one differentiable gauntlet
Var op_gauntlet(Graph& g, Var x) {
  Var a = g.softplus(x);
  Var b = g.sigmoid(x);
  Var c = g.sin(x) + g.cos(x);
  Var d = g.mul(a, b) + g.scale(c, 0.25);
  Var e = g.exp(g.clamp(d, -5.0, 5.0));
  Var f = g.log(g.add_scalar(g.square(e), 1.0));
  Var h = g.sqrt(g.add_scalar(g.relu(f), 0.5));
  Var col = g.add_scalar(g.row_sum(g.square(x)), 1.0);
  Var i = g.div_col(h, col);
  Var j = g.mul_col(i, g.reciprocal(col));
  Var k = g.concat_cols({j, g.slice_cols(j, 0, 2)});
  Var l = g.row_l2_norm(k) + g.row_l1_norm(j);
  return g.sum_all(l);
}

}  // namespace

TEST_CASE("gradcheck: elementwise and reduction ops") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Mat x0 = random_mat(rng, 6, 4, 1.2);
    auto res = check_input_gradients(
        x0,
        [](Graph& g, const Mat& x, Var& out) {
          out = g.input(x);
          return op_gauntlet(g, out);
        },
        rng, 24);
    CHECK(res.ok);
  }
}

TEST_CASE("gradcheck: linear layer parameters and input") {
  Rng rng(41);
  ParamStore store;
  Parameter& w = store.create("w", 5, 7);
  Parameter& b = store.create("b", 1, 5);
  w.value = random_mat(rng, 5, 7);
  b.value = random_mat(rng, 1, 5);
  Mat x0 = random_mat(rng, 9, 7);
  auto build = [&](Graph& g) {
    return g.sum_all(g.square(g.linear(g.constant(x0), w, b)));
  };
  auto res = check_param_gradients(store, build, rng, 30);
  CHECK(res.ok);
  auto res_in = check_input_gradients(
      x0,
      [&](Graph& g, const Mat& x, Var& out) {
        out = g.input(x);
        return g.sum_all(g.square(g.linear(out, w, b)));
      },
      rng, 30);
  CHECK(res_in.ok);
}

TEST_CASE("gradcheck: solve3x3") {
  Rng rng(55);
  for (int trial = 0; trial < 4; ++trial) {
    Mat a0(5, 9);
    for (int i = 0; i < 5; ++i) {
      Mat3 m = rodrigues(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))) +
               0.1 * Mat3(random_mat(rng, 3, 3));
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a0(i, r * 3 + c) = m(r, c);
    }
    Mat b0 = random_mat(rng, 5, 3);
    auto res_a = check_input_gradients(
        a0,
        [&](Graph& g, const Mat& a, Var& out) {
          out = g.input(a);
          return g.sum_all(g.square(g.solve3x3(out, g.constant(b0))));
        },
        rng, 30, 1e-5);
    CHECK(res_a.ok);
    auto res_b = check_input_gradients(
        b0,
        [&](Graph& g, const Mat& b, Var& out) {
          out = g.input(b);
          return g.sum_all(g.square(g.solve3x3(g.constant(a0), out)));
        },
        rng, 15);
    CHECK(res_b.ok);
  }
}

TEST_CASE("solve3x3: singular rows fall back to identity and report") {
  Graph g;
  Mat a = Mat::Zero(2, 9);
  a(0, 0) = a(0, 4) = a(0, 8) = 1.0;  // identity row
  Mat b(2, 3);
  b << 1, 2, 3, 4, 5, 6;
  Var solved = g.solve3x3(g.constant(a), g.constant(b));
  CHECK(g.singular_rows(solved) == std::vector<int>{1});
  CHECK((g.value(solved).row(0) - b.row(0)).norm() == 0.0);
  CHECK((g.value(solved).row(1) - b.row(1)).norm() == 0.0);
}

TEST_CASE("gradcheck: composite and segment_min") {
  Rng rng(77);
  auto offsets = std::make_shared<std::vector<int>>(std::vector<int>{0, 4, 9});
  Vec delta(9);
  for (int i = 0; i < 9; ++i) delta[i] = rng.uniform(0.01, 0.1);
  Mat sig0(9, 1), rgb0(9, 3);
  for (int i = 0; i < 9; ++i) {
    sig0(i, 0) = rng.uniform(0.1, 4.0);
    for (int c = 0; c < 3; ++c) rgb0(i, c) = rng.uniform(0.0, 1.0);
  }
  auto res_sigma = check_input_gradients(
      sig0,
      [&](Graph& g, const Mat& s, Var& out) {
        out = g.input(s);
        Var pix = g.composite(out, g.constant(rgb0), delta, offsets);
        return g.sum_all(g.square(pix));
      },
      rng, 9, 1e-5);
  CHECK(res_sigma.ok);
  auto res_rgb = check_input_gradients(
      rgb0,
      [&](Graph& g, const Mat& c, Var& out) {
        out = g.input(c);
        Var pix = g.composite(g.constant(sig0), out, delta, offsets);
        return g.sum_all(g.square(pix));
      },
      rng, 20);
  CHECK(res_rgb.ok);
  auto res_min = check_input_gradients(
      random_mat(rng, 9, 1),
      [&](Graph& g, const Mat& s, Var& out) {
        out = g.input(s);
        return g.sum_all(g.square(g.segment_min(out, offsets)));
      },
      rng, 9);
  CHECK(res_min.ok);
}

TEST_CASE("composite: rejects invalid inputs") {
  Graph g;
  auto offsets = std::make_shared<std::vector<int>>(std::vector<int>{0, 2});
  Vec delta = Vec::Constant(2, 0.1);
  Mat sigma = Mat::Constant(2, 1, -0.5);
  CHECK_THROWS_AS(g.composite(g.constant(sigma), g.constant(Mat::Zero(2, 3)), delta, offsets),
                  InvalidArgumentError);
}

TEST_CASE("param_row: gradients flow only to the indexed row") {
  Rng rng(91);
  ParamStore store;
  Parameter& table = store.create("latent", 6, 8);
  table.value = random_mat(rng, 6, 8);
  Graph g;
  Var row = g.param_row(table, 3, 5);
  g.backward(g.sum_all(g.square(row)));
  Mat grad = g.param_grad_or_zero(table);
  for (int r = 0; r < 6; ++r) {
    if (r == 3)
      CHECK(grad.row(r).cwiseAbs().maxCoeff() > 0.0);
    else
      CHECK(grad.row(r).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(g.param_row(table, 7, 2), InvalidFrameError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged, counter advances") {
  ParamStore store;
  Parameter& p = store.create("p", 2, 2);
  p.value << 1, 2, 3, 4;
  Mat before = p.value;
  Adam adam;
  Mat zero = Mat::Zero(2, 2);
  adam.step(store, [&](const Parameter&) { return &zero; }, 1e-3);
  CHECK(adam.step_count() == 1);
  CHECK((p.value - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: first step moves by about -lr sign(g)") {
  ParamStore store;
  Parameter& p = store.create("p", 1, 3);
  p.value << 1.0, -2.0, 0.5;
  Mat g0(1, 3);
  g0 << 0.3, -4.0, 1e-3;
  Mat before = p.value;
  Adam adam;
  adam.step(store, [&](const Parameter&) { return &g0; }, 0.01);
  for (int j = 0; j < 3; ++j) {
    const double moved = p.value(0, j) - before(0, j);
    const double expected = -0.01 * (g0(0, j) > 0 ? 1.0 : -1.0);
    CHECK(moved == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("adam: drives a quadratic toward zero") {
  ParamStore store;
  Parameter& x = store.create("x", 1, 1);
  x.value(0, 0) = 1.0;
  Adam adam;
  double prev = 1.0;
  bool monotone_after_burnin = true;
  for (int i = 0; i < 100; ++i) {
    Mat grad(1, 1);
    grad(0, 0) = 2.0 * x.value(0, 0);
    adam.step(store, [&](const Parameter&) { return &grad; }, 0.1);
    const double cur = std::abs(x.value(0, 0));
    if (i > 10 && cur > prev + 1e-12) monotone_after_burnin = false;
    prev = cur;
  }
  CHECK(std::abs(x.value(0, 0)) < 0.1);
  CHECK(monotone_after_burnin);
}

TEST_CASE("adam: non-finite gradient raises the divergence error") {
  ParamStore store;
  Parameter& p = store.create("p", 1, 1);
  Adam adam;
  Mat bad(1, 1);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(adam.step(store, [&](const Parameter&) { return &bad; }, 1e-3),
                  TrainingDivergedError);
}

TEST_CASE("lr_schedule: endpoints and geometric midpoint") {
  CHECK(lr_schedule(0, 20000) == 5e-4);
  CHECK(lr_schedule(20000, 20000) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_schedule(10000, 20000) ==
        doctest::Approx(std::sqrt(5e-4 * 5e-5)).epsilon(1e-12));
  CHECK_THROWS_AS(lr_schedule(-1, 100), InvalidArgumentError);
  CHECK_THROWS_AS(lr_schedule(101, 100), InvalidArgumentError);
}

TEST_CASE("positional encoding: dimensions and base values") {
  Mat v = Mat::Zero(2, 3);
  CHECK((positional_encoding(v, 0) - v).cwiseAbs().maxCoeff() == 0.0);
  Mat enc = positional_encoding(v, 6);
  CHECK(enc.cols() == 39);
  for (int l = 0; l < 6; ++l) {
    CHECK(enc.middleCols(3 + 6 * l, 3).cwiseAbs().maxCoeff() == 0.0);   // sin
    CHECK((enc.middleCols(6 + 6 * l, 3).array() - 1.0).abs().maxCoeff() == 0.0);  // cos
  }
  CHECK(encoding_dim(3, 4) == 27);
  CHECK(encoding_dim(3, 10) == 63);
  // graph and plain versions agree
  Rng rng(13);
  Mat x = random_mat(rng, 5, 3);
  Graph g;
  CHECK((g.value(positional_encoding(g, g.constant(x), 6)) - positional_encoding(x, 6))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("mlp: single linear layer is exact, dimension mismatch throws") {
  Rng rng(19);
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = 4;
  cfg.output_dim = 2;
  cfg.layers = 1;
  Mlp net(store, "net", cfg);
  net.weight(0).value = random_mat(rng, 2, 4);
  net.bias(0).value = random_mat(rng, 1, 2);
  Mat x = random_mat(rng, 7, 4);
  Mat expect = x * net.weight(0).value.transpose();
  expect.rowwise() += net.bias(0).value.row(0);
  CHECK((net.forward_plain(x) - expect).cwiseAbs().maxCoeff() == 0.0);
  Graph g;
  CHECK((g.value(net.forward(g, g.constant(x))) - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(net.forward_plain(random_mat(rng, 3, 5)), InvalidArgumentError);
  Graph g2;
  CHECK_THROWS_AS(net.forward(g2, g2.constant(random_mat(rng, 3, 5))), InvalidArgumentError);
}

TEST_CASE("mlp: softplus output stays positive at large negative preactivation") {
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.layers = 2;
  cfg.hidden_width = 4;
  cfg.hidden_activation = Activation::Softplus;
  Mlp net(store, "net", cfg);
  net.weight(0).value.setOnes();
  net.bias(0).value.setConstant(-100.0);
  net.weight(1).value.setOnes();
  net.bias(1).value.setZero();
  Mat x(1, 1);
  x << -50.0;
  Graph g;
  // hidden softplus values are tiny but non-negative, so the sum is too
  Var hidden_sum = net.forward(g, g.constant(x));
  CHECK(g.value(hidden_sum)(0, 0) >= 0.0);
  CHECK(g.value(hidden_sum)(0, 0) < 1e-30);
}

TEST_CASE("mlp: deep net matches a hand-rolled forward oracle") {
  Rng rng(29);
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = 5;
  cfg.output_dim = 3;
  cfg.hidden_width = 8;
  cfg.layers = 4;
  cfg.hidden_activation = Activation::Relu;
  cfg.skip_layers = {2};
  Mlp net(store, "net", cfg);
  net.init_default(rng);
  Mat x = random_mat(rng, 6, 5);
  // plain loops, no Eigen products
  Mat h = x;
  for (int l = 0; l < 4; ++l) {
    Mat in;
    if (l == 2) {
      in.resize(h.rows(), h.cols() + x.cols());
      in << h, x;
    } else {
      in = h;
    }
    const Mat& w = net.weight(l).value;
    const Mat& b = net.bias(l).value;
    Mat out = Mat::Zero(in.rows(), w.rows());
    for (int i = 0; i < in.rows(); ++i)
      for (int o = 0; o < w.rows(); ++o) {
        double acc = b(0, o);
        for (int k = 0; k < in.cols(); ++k) acc += in(i, k) * w(o, k);
        out(i, o) = l + 1 < 4 ? std::max(acc, 0.0) : acc;
      }
    h = out;
  }
  CHECK((net.forward_plain(x) - h).cwiseAbs().maxCoeff() < 1e-12);
  Graph g;
  CHECK((g.value(net.forward(g, g.constant(x))) - h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mlp: forward is deterministic") {
  Rng rng(43);
  ParamStore store;
  MlpConfig cfg;
  cfg.input_dim = 6;
  cfg.output_dim = 4;
  cfg.hidden_width = 16;
  cfg.layers = 3;
  Mlp net(store, "net", cfg);
  net.init_default(rng);
  Mat x = random_mat(rng, 10, 6);
  Mat a = net.forward_plain(x);
  Mat b = net.forward_plain(x);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradcheck: random 3-layer net") {
  Rng rng(57);
  for (int trial = 0; trial < 3; ++trial) {
    ParamStore store;
    MlpConfig cfg;
    cfg.input_dim = 4;
    cfg.output_dim = 2;
    cfg.hidden_width = 6;
    cfg.layers = 3;
    cfg.hidden_activation = trial % 2 == 0 ? Activation::Softplus : Activation::Relu;
    Mlp net(store, "net", cfg);
    net.init_default(rng);
    Mat x = random_mat(rng, 5, 4);
    auto res = check_param_gradients(
        store,
        [&](Graph& g) { return g.sum_all(g.square(net.forward(g, g.constant(x)))); },
        rng, 20);
    CHECK(res.ok);
  }
}

TEST_CASE("checkpoint: bit-exact round trip preserving order") {
  Rng rng(61);
  Checkpoint ckpt;
  Mat a = random_mat(rng, 3, 5);
  Mat b = random_mat(rng, 1, 1);
  ckpt.add("zeta", a);
  ckpt.add_scalar("alpha", 0.1 + 0.2);  // not representable exactly, must round trip
  ckpt.add("mid", b);
  test::TempDir dir("anif_ckpt");
  ckpt.write(dir.path + "/test.anif");
  Checkpoint loaded = Checkpoint::read(dir.path + "/test.anif");
  CHECK(loaded.names() == std::vector<std::string>{"zeta", "alpha", "mid"});
  CHECK((loaded.tensor("zeta") - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.scalar("alpha") == 0.1 + 0.2);
  CHECK((loaded.tensor("mid") - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(loaded.tensor("missing"), InvalidArgumentError);
  CHECK_THROWS_AS(Checkpoint::read(dir.path + "/nope.anif"), IoError);
}

TEST_CASE("rng: seeded stream reproduces the frozen golden draw") {
  Rng rng(42);
  // frozen from the first run of the pcg32 stream with this seed
  const uint32_t expected[4] = {2750043602u, 2475823983u, 3323228185u, 3684574533u};
  for (uint32_t e : expected) CHECK(rng.next_u32() == e);
  Rng u(7);
  const double d0 = u.uniform();
  Rng u2(7);
  CHECK(u2.uniform() == d0);
}
