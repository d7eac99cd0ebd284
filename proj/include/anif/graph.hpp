// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "anif/common.hpp"

namespace anif {

// A named trainable tensor. Values persist across steps; gradients live on
// the Graph that produced them.
struct Parameter {
  std::string name;
  Mat value;
  int id = -1;
};

// Owns the parameters of one model in creation order. Creation order is the
// canonical iteration order everywhere (optimizer, checkpoints, reductions),
// which keeps multi-threaded runs bitwise reproducible.
class ParamStore {
 public:
  Parameter& create(const std::string& name, int rows, int cols);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  int size() const { return static_cast<int>(params_.size()); }
  Parameter& at(int id) { return *params_[id]; }
  const Parameter& at(int id) const { return *params_[id]; }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, int> by_name_;
};

// Reverse-mode tape over Eigen matrices, batch rows by feature columns.
// Forward values are computed eagerly as nodes are created; backward() walks
// the tape in reverse. Lightweight Var handles index into the tape.
class Graph;

struct Var {
  Graph* g = nullptr;
  int id = -1;

  bool valid() const { return g != nullptr && id >= 0; }
};

class Graph {
 public:
  enum class Op : uint8_t {
    kConstant,
    kInput,  // leaf that keeps a gradient
    kParam,
    kParamRowBroadcast,
    kLinear,  // x * W^T + b
    kMatmulConst,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddScalar,
    kMulScalarNode,  // elementwise times a 1x1 node
    kMulCol,         // times an N x 1 column, broadcast across columns
    kDivCol,
    kRelu,
    kSoftplus,
    kSigmoid,
    kExp,
    kLog,
    kSin,
    kCos,
    kSquare,
    kSqrt,
    kReciprocal,
    kClamp,
    kRowSum,
    kRowL2Norm,
    kRowL1Norm,
    kSumAll,
    kConcatCols,
    kSliceCols,
    kSolve3x3,     // rowwise A^{-1} b with A as N x 9, b as N x 3
    kComposite,    // emission-absorption quadrature over ray segments
    kSegmentMin,   // per-segment min with subgradient to the argmin
  };

  Var constant(Mat v);
  Var constant_scalar(double v);
  Var input(Mat v);
  Var param(const Parameter& p);
  // Row `row` of p broadcast to `rows` identical rows; gradients accumulate
  // into that row only.
  Var param_row(const Parameter& p, int row, int rows);

  Var linear(Var x, const Parameter& w, const Parameter& b);
  Var matmul_const(Var x, const Mat& c);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double a);
  Var add_scalar(Var x, double a);
  Var mul_scalar_node(Var x, Var s);
  Var mul_col(Var x, Var col);
  Var div_col(Var x, Var col);
  Var relu(Var x);
  Var softplus(Var x);
  Var sigmoid(Var x);
  Var exp(Var x);
  Var log(Var x);
  Var sin(Var x);
  Var cos(Var x);
  Var square(Var x);
  Var sqrt(Var x);
  Var reciprocal(Var x);
  Var clamp(Var x, double lo, double hi);
  Var row_sum(Var x);
  Var row_l2_norm(Var x);
  Var row_l1_norm(Var x);
  Var sum_all(Var x);
  Var concat_cols(const std::vector<Var>& xs);
  Var slice_cols(Var x, int offset, int width);

  // Rowwise solve of the 3x3 system packed row-major in a (N x 9): out row i
  // is A_i^{-1} b_i. Rows whose |det| <= det_eps are replaced by the identity
  // system and reported through singular_rows(); their gradients are zeroed.
  Var solve3x3(Var a, Var b, double det_eps = 1e-8);
  const std::vector<int>& singular_rows(Var solve_node) const;

  // Quadrature over rays: samples of ray r occupy rows [offsets[r],
  // offsets[r+1]). Output is R x 4: blended rgb then accumulated alpha.
  Var composite(Var sigma, Var rgb, const Vec& delta,
                std::shared_ptr<const std::vector<int>> offsets);
  Var segment_min(Var x, std::shared_ptr<const std::vector<int>> offsets);

  const Mat& value(Var v) const;
  // Gradient of a leaf created with input(); valid after backward().
  const Mat& grad(Var v) const;
  bool has_grad(Var v) const;

  // Reverse sweep from a 1x1 node. Seeds d(loss)/d(loss) = 1.
  void backward(Var loss);

  // Parameter gradients accumulated by the last backward(); zero matrix if
  // the parameter was not touched.
  const Mat* param_grad(const Parameter& p) const;
  Mat param_grad_or_zero(const Parameter& p) const;

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Op op;
    int a = -1, b = -1;
    std::vector<int> ins;  // concat only
    const Parameter* p = nullptr;
    const Parameter* p2 = nullptr;
    double s0 = 0.0, s1 = 0.0;
    int i0 = 0, i1 = 0;
    Mat c;    // constant operand (matmul_const) or cached data
    Vec vec;  // cached data (composite deltas)
    std::shared_ptr<const std::vector<int>> seg;
    std::vector<int> singular;
    Mat val;
    Mat grad;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, Mat> param_grads_;
  bool ran_backward_ = false;

  Var push(Node n);
  Node& node(Var v);
  const Node& node(Var v) const;
  Mat& touch_grad(int id);
  void check_same(Var a, Var b) const;
  void backward_node(int id);
};

// Convenience operators; both operands must live on the same graph.
inline Var operator+(Var a, Var b) { return a.g->add(a, b); }
inline Var operator-(Var a, Var b) { return a.g->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.g->mul(a, b); }
inline Var operator*(double a, Var b) { return b.g->scale(b, a); }
inline Var operator*(Var a, double b) { return a.g->scale(a, b); }
inline Var operator+(Var a, double b) { return a.g->add_scalar(a, b); }
inline Var operator-(Var a, double b) { return a.g->add_scalar(a, -b); }
inline Var operator-(Var a) { return a.g->scale(a, -1.0); }

}  // namespace anif
