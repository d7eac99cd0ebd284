// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/nets.hpp"

#include <cmath>

namespace anif {

int encoding_dim(int input_dim, int frequencies) { return input_dim * (1 + 2 * frequencies); }

Mat positional_encoding(const Mat& v, int frequencies) {
  if (frequencies < 0) throw InvalidArgumentError("positional_encoding: negative L");
  Mat out(v.rows(), encoding_dim(static_cast<int>(v.cols()), frequencies));
  out.leftCols(v.cols()) = v;
  Eigen::Index off = v.cols();
  for (int l = 0; l < frequencies; ++l) {
    const double f = kPi * std::pow(2.0, l);
    out.middleCols(off, v.cols()) = (f * v).array().sin();
    off += v.cols();
    out.middleCols(off, v.cols()) = (f * v).array().cos();
    off += v.cols();
  }
  return out;
}

Var positional_encoding(Graph& g, Var v, int frequencies) {
  if (frequencies < 0) throw InvalidArgumentError("positional_encoding: negative L");
  if (frequencies == 0) return v;
  std::vector<Var> parts{v};
  for (int l = 0; l < frequencies; ++l) {
    Var s = g.scale(v, kPi * std::pow(2.0, l));
    parts.push_back(g.sin(s));
    parts.push_back(g.cos(s));
  }
  return g.concat_cols(parts);
}

Mlp::Mlp(ParamStore& store, const std::string& prefix, const MlpConfig& config) : cfg_(config) {
  if (cfg_.layers < 1) throw InvalidArgumentError("mlp: need at least one layer");
  for (int l = 0; l < cfg_.layers; ++l) {
    int in = l == 0 ? cfg_.input_dim : cfg_.hidden_width;
    if (is_skip(l)) in += cfg_.input_dim;
    const int out = l == cfg_.layers - 1 ? cfg_.output_dim : cfg_.hidden_width;
    weights_.push_back(&store.create(prefix + ".w" + std::to_string(l), out, in));
    biases_.push_back(&store.create(prefix + ".b" + std::to_string(l), 1, out));
  }
}

bool Mlp::is_skip(int layer) const {
  if (layer == 0) return false;
  for (int s : cfg_.skip_layers)
    if (s == layer) return true;
  return false;
}

Var Mlp::forward(Graph& g, Var x) const {
  Var h = x;
  for (int l = 0; l < layer_count(); ++l) {
    if (is_skip(l)) h = g.concat_cols({h, x});
    h = g.linear(h, *weights_[l], *biases_[l]);
    if (l + 1 < layer_count()) {
      if (cfg_.hidden_activation == Activation::Relu)
        h = g.relu(h);
      else if (cfg_.hidden_activation == Activation::Softplus)
        h = g.softplus(h);
    }
  }
  return h;
}

Mat Mlp::forward_plain(const Mat& x) const {
  if (x.cols() != cfg_.input_dim) throw InvalidArgumentError("mlp: input width mismatch");
  Mat h = x;
  for (int l = 0; l < layer_count(); ++l) {
    if (is_skip(l)) {
      Mat joined(h.rows(), h.cols() + x.cols());
      joined << h, x;
      h = std::move(joined);
    }
    Mat y = h * weights_[l]->value.transpose();
    y.rowwise() += biases_[l]->value.row(0);
    if (l + 1 < layer_count()) {
      if (cfg_.hidden_activation == Activation::Relu) {
        y = y.cwiseMax(0.0);
      } else if (cfg_.hidden_activation == Activation::Softplus) {
        const auto a = y.array();
        y = (a > 0.0).select(a + (-a).exp().log1p(), a.exp().log1p());
      }
    }
    h = std::move(y);
  }
  return h;
}

void Mlp::init_default(Rng& rng) {
  for (int l = 0; l < layer_count(); ++l) {
    Mat& w = weights_[l]->value;
    const double bound = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    biases_[l]->value.setZero();
  }
}

void Mlp::init_final_layer_uniform(Rng& rng, double scale) {
  Mat& w = weights_.back()->value;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-scale, scale);
  Mat& b = biases_.back()->value;
  for (Eigen::Index j = 0; j < b.cols(); ++j) b(0, j) = rng.uniform(-scale, scale);
}

void Mlp::zero_final_layer() {
  weights_.back()->value.setZero();
  biases_.back()->value.setZero();
}

NetworkShapes network_shapes(Profile profile, int parts, int latent_dim, int geometry_skip) {
  NetworkShapes s;
  const bool paper = profile == Profile::Paper;
  const int width = paper ? 256 : 64;
  const int deep = paper ? 9 : 4;
  const int color_layers = paper ? 5 : 4;
  s.feature_dim = width;

  s.geometry.input_dim = encoding_dim(3, kXyzFrequencies);
  s.geometry.output_dim = 1 + s.feature_dim;
  s.geometry.hidden_width = width;
  s.geometry.layers = deep;
  s.geometry.hidden_activation = Activation::Softplus;
  if (paper && geometry_skip > 0 && geometry_skip < deep) s.geometry.skip_layers = {geometry_skip};

  s.color.input_dim = s.feature_dim + encoding_dim(3, kDirFrequencies) + latent_dim;
  s.color.output_dim = 3;
  s.color.hidden_width = width;
  s.color.layers = color_layers;
  s.color.hidden_activation = Activation::Softplus;

  s.weight_residual.input_dim = encoding_dim(3, kDeformXyzFrequencies) + latent_dim;
  s.weight_residual.output_dim = parts;
  s.weight_residual.hidden_width = width;
  s.weight_residual.layers = deep;
  s.weight_residual.hidden_activation = Activation::Relu;

  s.displacement.input_dim = encoding_dim(3, kDeformXyzFrequencies) + 3 * parts;
  s.displacement.output_dim = 3;
  s.displacement.hidden_width = width;
  s.displacement.layers = deep;
  s.displacement.hidden_activation = Activation::Relu;
  return s;
}

}  // namespace anif
