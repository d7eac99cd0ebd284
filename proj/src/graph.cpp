// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/graph.hpp"

#include <cmath>

namespace anif {

Parameter& ParamStore::create(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) throw InvalidArgumentError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Mat::Zero(rows, cols);
  p->id = static_cast<int>(params_.size());
  by_name_[name] = p->id;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : params_[it->second].get();
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Graph::Node& Graph::node(Var v) {
  if (!v.valid() || v.g != this || v.id >= static_cast<int>(nodes_.size()))
    throw InvalidStateError("graph: invalid node handle");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.g != this || v.id >= static_cast<int>(nodes_.size()))
    throw InvalidStateError("graph: invalid node handle");
  return nodes_[v.id];
}

void Graph::check_same(Var a, Var b) const {
  const Mat& va = value(a);
  const Mat& vb = value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw InvalidArgumentError("graph: operand shape mismatch");
}

const Mat& Graph::value(Var v) const { return node(v).val; }

const Mat& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) throw InvalidStateError("graph: no gradient on node");
  return n.grad;
}

bool Graph::has_grad(Var v) const { return node(v).grad.size() != 0; }

Mat& Graph::touch_grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
  return n.grad;
}

Var Graph::constant(Mat v) {
  Node n;
  n.op = Op::kConstant;
  n.val = std::move(v);
  return push(std::move(n));
}

Var Graph::constant_scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

Var Graph::input(Mat v) {
  Node n;
  n.op = Op::kInput;
  n.val = std::move(v);
  return push(std::move(n));
}

Var Graph::param(const Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.p = &p;
  n.val = p.value;
  return push(std::move(n));
}

Var Graph::param_row(const Parameter& p, int row, int rows) {
  if (row < 0 || row >= p.value.rows())
    throw InvalidFrameError("param_row: no row " + std::to_string(row) + " in " + p.name);
  Node n;
  n.op = Op::kParamRowBroadcast;
  n.p = &p;
  n.i0 = row;
  n.val = p.value.row(row).replicate(rows, 1);
  return push(std::move(n));
}

Var Graph::linear(Var x, const Parameter& w, const Parameter& b) {
  const Mat& xv = value(x);
  if (xv.cols() != w.value.cols())
    throw InvalidArgumentError("linear: input width " + std::to_string(xv.cols()) +
                               " != fan-in " + std::to_string(w.value.cols()) + " of " + w.name);
  if (b.value.rows() != 1 || b.value.cols() != w.value.rows())
    throw InvalidArgumentError("linear: bias shape mismatch for " + w.name);
  Node n;
  n.op = Op::kLinear;
  n.a = x.id;
  n.p = &w;
  n.p2 = &b;
  n.val.noalias() = xv * w.value.transpose();
  n.val.rowwise() += b.value.row(0);
  return push(std::move(n));
}

Var Graph::matmul_const(Var x, const Mat& c) {
  const Mat& xv = value(x);
  if (xv.cols() != c.rows()) throw InvalidArgumentError("matmul_const: shape mismatch");
  Node n;
  n.op = Op::kMatmulConst;
  n.a = x.id;
  n.c = c;
  n.val.noalias() = xv * c;
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  check_same(a, b);
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.val = value(a) + value(b);
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  check_same(a, b);
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.val = value(a) - value(b);
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  check_same(a, b);
  Node n;
  n.op = Op::kMul;
  n.a = a.id;
  n.b = b.id;
  n.val = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Graph::scale(Var x, double a) {
  Node n;
  n.op = Op::kScale;
  n.a = x.id;
  n.s0 = a;
  n.val = a * value(x);
  return push(std::move(n));
}

Var Graph::add_scalar(Var x, double a) {
  Node n;
  n.op = Op::kAddScalar;
  n.a = x.id;
  n.s0 = a;
  n.val = value(x).array() + a;
  return push(std::move(n));
}

Var Graph::mul_scalar_node(Var x, Var s) {
  if (value(s).size() != 1) throw InvalidArgumentError("mul_scalar_node: scalar must be 1x1");
  Node n;
  n.op = Op::kMulScalarNode;
  n.a = x.id;
  n.b = s.id;
  n.val = value(x) * value(s)(0, 0);
  return push(std::move(n));
}

Var Graph::mul_col(Var x, Var col) {
  const Mat& xv = value(x);
  const Mat& cv = value(col);
  if (cv.cols() != 1 || cv.rows() != xv.rows())
    throw InvalidArgumentError("mul_col: column shape mismatch");
  Node n;
  n.op = Op::kMulCol;
  n.a = x.id;
  n.b = col.id;
  n.val = xv.array().colwise() * cv.col(0).array();
  return push(std::move(n));
}

Var Graph::div_col(Var x, Var col) {
  const Mat& xv = value(x);
  const Mat& cv = value(col);
  if (cv.cols() != 1 || cv.rows() != xv.rows())
    throw InvalidArgumentError("div_col: column shape mismatch");
  Node n;
  n.op = Op::kDivCol;
  n.a = x.id;
  n.b = col.id;
  n.val = xv.array().colwise() / cv.col(0).array();
  return push(std::move(n));
}

Var Graph::relu(Var x) {
  Node n;
  n.op = Op::kRelu;
  n.a = x.id;
  n.val = value(x).cwiseMax(0.0);
  return push(std::move(n));
}

Var Graph::softplus(Var x) {
  Node n;
  n.op = Op::kSoftplus;
  n.a = x.id;
  const auto& a = value(x).array();
  n.val = (a > 0.0).select(a + (-a).exp().log1p(), a.exp().log1p());
  return push(std::move(n));
}

Var Graph::sigmoid(Var x) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = x.id;
  const auto& a = value(x).array();
  n.val = (a >= 0.0).select(1.0 / (1.0 + (-a).exp()), a.exp() / (1.0 + a.exp()));
  return push(std::move(n));
}

Var Graph::exp(Var x) {
  Node n;
  n.op = Op::kExp;
  n.a = x.id;
  n.val = value(x).array().exp();
  return push(std::move(n));
}

Var Graph::log(Var x) {
  Node n;
  n.op = Op::kLog;
  n.a = x.id;
  n.val = value(x).array().log();
  return push(std::move(n));
}

Var Graph::sin(Var x) {
  Node n;
  n.op = Op::kSin;
  n.a = x.id;
  n.val = value(x).array().sin();
  return push(std::move(n));
}

Var Graph::cos(Var x) {
  Node n;
  n.op = Op::kCos;
  n.a = x.id;
  n.val = value(x).array().cos();
  return push(std::move(n));
}

Var Graph::square(Var x) {
  Node n;
  n.op = Op::kSquare;
  n.a = x.id;
  n.val = value(x).array().square();
  return push(std::move(n));
}

Var Graph::sqrt(Var x) {
  Node n;
  n.op = Op::kSqrt;
  n.a = x.id;
  n.val = value(x).array().sqrt();
  return push(std::move(n));
}

Var Graph::reciprocal(Var x) {
  Node n;
  n.op = Op::kReciprocal;
  n.a = x.id;
  n.val = value(x).array().inverse();
  return push(std::move(n));
}

Var Graph::clamp(Var x, double lo, double hi) {
  Node n;
  n.op = Op::kClamp;
  n.a = x.id;
  n.s0 = lo;
  n.s1 = hi;
  n.val = value(x).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(n));
}

Var Graph::row_sum(Var x) {
  Node n;
  n.op = Op::kRowSum;
  n.a = x.id;
  n.val = value(x).rowwise().sum();
  return push(std::move(n));
}

Var Graph::row_l2_norm(Var x) {
  Node n;
  n.op = Op::kRowL2Norm;
  n.a = x.id;
  n.val = value(x).rowwise().norm();
  return push(std::move(n));
}

Var Graph::row_l1_norm(Var x) {
  Node n;
  n.op = Op::kRowL1Norm;
  n.a = x.id;
  n.val = value(x).cwiseAbs().rowwise().sum();
  return push(std::move(n));
}

Var Graph::sum_all(Var x) {
  Node n;
  n.op = Op::kSumAll;
  n.a = x.id;
  n.val = Mat::Constant(1, 1, value(x).sum());
  return push(std::move(n));
}

Var Graph::concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgumentError("concat_cols: no operands");
  Eigen::Index rows = value(xs[0]).rows();
  Eigen::Index cols = 0;
  for (const Var& x : xs) {
    if (value(x).rows() != rows) throw InvalidArgumentError("concat_cols: row mismatch");
    cols += value(x).cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.val.resize(rows, cols);
  Eigen::Index off = 0;
  for (const Var& x : xs) {
    n.ins.push_back(x.id);
    n.val.middleCols(off, value(x).cols()) = value(x);
    off += value(x).cols();
  }
  return push(std::move(n));
}

Var Graph::slice_cols(Var x, int offset, int width) {
  const Mat& xv = value(x);
  if (offset < 0 || width < 0 || offset + width > xv.cols())
    throw InvalidArgumentError("slice_cols: out of range");
  Node n;
  n.op = Op::kSliceCols;
  n.a = x.id;
  n.i0 = offset;
  n.i1 = width;
  n.val = xv.middleCols(offset, width);
  return push(std::move(n));
}

Var Graph::solve3x3(Var a, Var b, double det_eps) {
  const Mat& av = value(a);
  const Mat& bv = value(b);
  if (av.cols() != 9 || bv.cols() != 3 || av.rows() != bv.rows())
    throw InvalidArgumentError("solve3x3: expected N x 9 and N x 3");
  Node n;
  n.op = Op::kSolve3x3;
  n.a = a.id;
  n.b = b.id;
  const Eigen::Index rows = av.rows();
  n.val.resize(rows, 3);
  n.c.resize(rows, 9);  // cached inverses, row-major per row
  for (Eigen::Index i = 0; i < rows; ++i) {
    Mat3 m;
    m << av(i, 0), av(i, 1), av(i, 2), av(i, 3), av(i, 4), av(i, 5), av(i, 6), av(i, 7), av(i, 8);
    const double det = m.determinant();
    if (std::abs(det) <= det_eps) {
      n.singular.push_back(static_cast<int>(i));
      m = Mat3::Identity();
    }
    Mat3 inv = m.inverse();
    n.val.row(i) = (inv * bv.row(i).transpose()).transpose();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) n.c(i, r * 3 + c) = inv(r, c);
  }
  return push(std::move(n));
}

const std::vector<int>& Graph::singular_rows(Var solve_node) const {
  const Node& n = node(solve_node);
  if (n.op != Op::kSolve3x3) throw InvalidArgumentError("singular_rows: not a solve node");
  return n.singular;
}

Var Graph::composite(Var sigma, Var rgb, const Vec& delta,
                     std::shared_ptr<const std::vector<int>> offsets) {
  const Mat& sv = value(sigma);
  const Mat& cv = value(rgb);
  if (sv.cols() != 1 || cv.cols() != 3 || sv.rows() != cv.rows())
    throw InvalidArgumentError("composite: expected N x 1 densities and N x 3 colors");
  if (delta.size() != sv.rows()) throw InvalidArgumentError("composite: delta size mismatch");
  if ((sv.array() < 0.0).any()) throw InvalidArgumentError("composite: negative density");
  if ((delta.array() <= 0.0).any()) throw InvalidArgumentError("composite: non-positive delta");
  if (offsets->empty() || offsets->back() != sv.rows())
    throw InvalidArgumentError("composite: bad segment offsets");
  const int rays = static_cast<int>(offsets->size()) - 1;
  Node n;
  n.op = Op::kComposite;
  n.a = sigma.id;
  n.b = rgb.id;
  n.vec = delta;
  n.seg = offsets;
  n.val.resize(rays, 4);
  n.c.resize(sv.rows(), 2);  // per sample: weight, transmittance after the sample
  for (int r = 0; r < rays; ++r) {
    double t = 1.0;
    Vec3 color = Vec3::Zero();
    for (int k = (*offsets)[r]; k < (*offsets)[r + 1]; ++k) {
      const double alpha = 1.0 - std::exp(-sv(k, 0) * delta[k]);
      const double w = t * alpha;
      color += w * cv.row(k).transpose();
      t *= 1.0 - alpha;
      n.c(k, 0) = w;
      n.c(k, 1) = t;
    }
    n.val(r, 0) = color.x();
    n.val(r, 1) = color.y();
    n.val(r, 2) = color.z();
    n.val(r, 3) = 1.0 - t;
  }
  return push(std::move(n));
}

Var Graph::segment_min(Var x, std::shared_ptr<const std::vector<int>> offsets) {
  const Mat& xv = value(x);
  if (xv.cols() != 1) throw InvalidArgumentError("segment_min: expected N x 1");
  if (offsets->empty() || offsets->back() != xv.rows())
    throw InvalidArgumentError("segment_min: bad segment offsets");
  const int rays = static_cast<int>(offsets->size()) - 1;
  Node n;
  n.op = Op::kSegmentMin;
  n.a = x.id;
  n.seg = offsets;
  n.val.resize(rays, 1);
  n.ins.resize(rays);  // argmin cache
  for (int r = 0; r < rays; ++r) {
    if ((*offsets)[r] >= (*offsets)[r + 1])
      throw InvalidArgumentError("segment_min: empty segment");
    int arg = (*offsets)[r];
    double best = xv(arg, 0);
    for (int k = (*offsets)[r] + 1; k < (*offsets)[r + 1]; ++k)
      if (xv(k, 0) < best) {
        best = xv(k, 0);
        arg = k;
      }
    n.val(r, 0) = best;
    n.ins[r] = arg;
  }
  return push(std::move(n));
}

void Graph::backward(Var loss) {
  if (!loss.valid() || loss.g != this || nodes_.empty() ||
      loss.id >= static_cast<int>(nodes_.size()))
    throw InvalidStateError("backward called before any forward computation");
  if (node(loss).val.size() != 1) throw InvalidArgumentError("backward: loss must be 1x1");
  for (Node& n : nodes_) n.grad.resize(0, 0);
  param_grads_.clear();
  touch_grad(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id)
    if (nodes_[id].grad.size() != 0) backward_node(id);
  ran_backward_ = true;
}

void Graph::backward_node(int id) {
  Node& n = nodes_[id];
  const Mat& g = n.grad;
  auto in_val = [&](int i) -> const Mat& { return nodes_[i].val; };
  auto in_grad = [&](int i) -> Mat& { return touch_grad(i); };
  switch (n.op) {
    case Op::kConstant:
      break;
    case Op::kInput:
      break;
    case Op::kParam: {
      auto [it, fresh] = param_grads_.try_emplace(n.p, Mat());
      if (fresh) it->second = Mat::Zero(n.p->value.rows(), n.p->value.cols());
      it->second += g;
      break;
    }
    case Op::kParamRowBroadcast: {
      auto [it, fresh] = param_grads_.try_emplace(n.p, Mat());
      if (fresh) it->second = Mat::Zero(n.p->value.rows(), n.p->value.cols());
      it->second.row(n.i0) += g.colwise().sum();
      break;
    }
    case Op::kLinear: {
      in_grad(n.a).noalias() += g * n.p->value;
      auto [wi, wfresh] = param_grads_.try_emplace(n.p, Mat());
      if (wfresh) wi->second = Mat::Zero(n.p->value.rows(), n.p->value.cols());
      wi->second.noalias() += g.transpose() * in_val(n.a);
      auto [bi, bfresh] = param_grads_.try_emplace(n.p2, Mat());
      if (bfresh) bi->second = Mat::Zero(1, n.p2->value.cols());
      bi->second += g.colwise().sum();
      break;
    }
    case Op::kMatmulConst:
      in_grad(n.a).noalias() += g * n.c.transpose();
      break;
    case Op::kAdd:
      in_grad(n.a) += g;
      in_grad(n.b) += g;
      break;
    case Op::kSub:
      in_grad(n.a) += g;
      in_grad(n.b) -= g;
      break;
    case Op::kMul:
      in_grad(n.a) += g.cwiseProduct(in_val(n.b));
      in_grad(n.b) += g.cwiseProduct(in_val(n.a));
      break;
    case Op::kScale:
      in_grad(n.a) += n.s0 * g;
      break;
    case Op::kAddScalar:
      in_grad(n.a) += g;
      break;
    case Op::kMulScalarNode:
      in_grad(n.a) += g * in_val(n.b)(0, 0);
      in_grad(n.b)(0, 0) += g.cwiseProduct(in_val(n.a)).sum();
      break;
    case Op::kMulCol:
      in_grad(n.a) += (g.array().colwise() * in_val(n.b).col(0).array()).matrix();
      in_grad(n.b).col(0) += g.cwiseProduct(in_val(n.a)).rowwise().sum();
      break;
    case Op::kDivCol:
      in_grad(n.a) += (g.array().colwise() / in_val(n.b).col(0).array()).matrix();
      in_grad(n.b).col(0) -=
          (g.cwiseProduct(n.val).array().colwise() / in_val(n.b).col(0).array())
              .rowwise()
              .sum()
              .matrix();
      break;
    case Op::kRelu:
      in_grad(n.a) += (in_val(n.a).array() > 0.0).select(g.array(), 0.0).matrix();
      break;
    case Op::kSoftplus: {
      const auto& a = in_val(n.a).array();
      Mat s = (a >= 0.0).select(1.0 / (1.0 + (-a).exp()), a.exp() / (1.0 + a.exp()));
      in_grad(n.a) += g.cwiseProduct(s);
      break;
    }
    case Op::kSigmoid:
      in_grad(n.a) +=
          g.cwiseProduct(n.val.cwiseProduct((1.0 - n.val.array()).matrix()));
      break;
    case Op::kExp:
      in_grad(n.a) += g.cwiseProduct(n.val);
      break;
    case Op::kLog:
      in_grad(n.a) += g.cwiseQuotient(in_val(n.a));
      break;
    case Op::kSin:
      in_grad(n.a) += g.cwiseProduct(in_val(n.a).array().cos().matrix());
      break;
    case Op::kCos:
      in_grad(n.a) -= g.cwiseProduct(in_val(n.a).array().sin().matrix());
      break;
    case Op::kSquare:
      in_grad(n.a) += 2.0 * g.cwiseProduct(in_val(n.a));
      break;
    case Op::kSqrt:
      in_grad(n.a) +=
          (n.val.array() > 0.0).select(0.5 * g.array() / n.val.array(), 0.0).matrix();
      break;
    case Op::kReciprocal:
      in_grad(n.a) -= g.cwiseProduct(n.val.cwiseProduct(n.val));
      break;
    case Op::kClamp: {
      const auto& a = in_val(n.a).array();
      in_grad(n.a) +=
          ((a >= n.s0) && (a <= n.s1)).select(g.array(), 0.0).matrix();
      break;
    }
    case Op::kRowSum:
      in_grad(n.a).colwise() += g.col(0);
      break;
    case Op::kRowL2Norm: {
      Vec denom = n.val.col(0).cwiseMax(1e-20);
      in_grad(n.a) +=
          (in_val(n.a).array().colwise() * (g.col(0).array() / denom.array())).matrix();
      break;
    }
    case Op::kRowL1Norm: {
      const auto& a = in_val(n.a).array();
      Mat sign = (a > 0.0).select(Mat::Constant(a.rows(), a.cols(), 1.0),
                                  (a < 0.0).select(Mat::Constant(a.rows(), a.cols(), -1.0),
                                                   Mat::Zero(a.rows(), a.cols())));
      in_grad(n.a) += (sign.array().colwise() * g.col(0).array()).matrix();
      break;
    }
    case Op::kSumAll:
      in_grad(n.a).array() += g(0, 0);
      break;
    case Op::kConcatCols: {
      Eigen::Index off = 0;
      for (int idx : n.ins) {
        in_grad(idx) += g.middleCols(off, nodes_[idx].val.cols());
        off += nodes_[idx].val.cols();
      }
      break;
    }
    case Op::kSliceCols:
      in_grad(n.a).middleCols(n.i0, n.i1) += g;
      break;
    case Op::kSolve3x3: {
      Mat& ga = in_grad(n.a);
      Mat& gb = in_grad(n.b);
      size_t sidx = 0;
      for (Eigen::Index i = 0; i < n.val.rows(); ++i) {
        if (sidx < n.singular.size() && n.singular[sidx] == i) {
          ++sidx;
          continue;
        }
        Mat3 inv;
        inv << n.c(i, 0), n.c(i, 1), n.c(i, 2), n.c(i, 3), n.c(i, 4), n.c(i, 5), n.c(i, 6),
            n.c(i, 7), n.c(i, 8);
        const Vec3 gy = g.row(i).transpose();
        const Vec3 y = n.val.row(i).transpose();
        const Vec3 db = inv.transpose() * gy;
        gb.row(i) += db.transpose();
        const Mat3 da = -db * y.transpose();
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) ga(i, r * 3 + c) += da(r, c);
      }
      break;
    }
    case Op::kComposite: {
      const Mat& sv = in_val(n.a);
      const Mat& cv = in_val(n.b);
      Mat& gs = in_grad(n.a);
      Mat& gc = in_grad(n.b);
      const auto& offsets = *n.seg;
      const int rays = static_cast<int>(offsets.size()) - 1;
      for (int r = 0; r < rays; ++r) {
        const Vec3 grgb(g(r, 0), g(r, 1), g(r, 2));
        const double galpha = g(r, 3);
        const double t_final =
            offsets[r + 1] > offsets[r] ? n.c(offsets[r + 1] - 1, 1) : 1.0;
        Vec3 tail = Vec3::Zero();  // sum_{m>k} w_m c_m, built back to front
        for (int k = offsets[r + 1] - 1; k >= offsets[r]; --k) {
          const double w = n.c(k, 0);
          const double t_next = n.c(k, 1);
          const Vec3 ck = cv.row(k).transpose();
          gc.row(k) += (w * grgb).transpose();
          const double dC = grgb.dot(t_next * ck - tail);
          gs(k, 0) += n.vec[k] * (dC + galpha * t_final);
          tail += w * ck;
        }
      }
      break;
    }
    case Op::kSegmentMin: {
      Mat& gx = in_grad(n.a);
      for (size_t r = 0; r < n.ins.size(); ++r) gx(n.ins[r], 0) += g(r, 0);
      break;
    }
  }
}

const Mat* Graph::param_grad(const Parameter& p) const {
  auto it = param_grads_.find(&p);
  return it == param_grads_.end() ? nullptr : &it->second;
}

Mat Graph::param_grad_or_zero(const Parameter& p) const {
  const Mat* g = param_grad(p);
  return g ? *g : Mat::Zero(p.value.rows(), p.value.cols());
}

}  // namespace anif
