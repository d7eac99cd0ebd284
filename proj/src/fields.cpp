// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/fields.hpp"

#include <cmath>

namespace anif {

double sdf_to_density(double s, double beta) {
  if (beta < CanonicalField::kBetaFloor)
    throw InvalidArgumentError("sdf_to_density: beta below floor");
  if (s < 0.0) return (1.0 - 0.5 * std::exp(s / beta)) / beta;
  return 0.5 * std::exp(-s / beta) / beta;
}

Var sdf_to_density(Graph& g, Var s, Var beta) {
  const Mat& sv = g.value(s);
  if (sv.cols() != 1) throw InvalidArgumentError("sdf_to_density: expected N x 1");
  Var inv_beta = g.reciprocal(beta);
  Var u = g.mul_scalar_node(s, inv_beta);  // s / beta
  // Each branch only feeds rows its mask selects; the clamp keeps the dead
  // branch's exp argument from overflowing on the other rows.
  Var inside = g.mul_scalar_node(
      g.add_scalar(g.scale(g.exp(g.clamp(u, -746.0, 0.0)), -0.5), 1.0), inv_beta);
  Var outside =
      g.mul_scalar_node(g.scale(g.exp(g.clamp(g.scale(u, -1.0), -746.0, 0.0)), 0.5), inv_beta);
  Mat mask_in = (sv.array() < 0.0).cast<double>();
  Mat mask_out = (sv.array() >= 0.0).cast<double>();
  return g.add(g.mul(inside, g.constant(std::move(mask_in))),
               g.mul(outside, g.constant(std::move(mask_out))));
}

CanonicalField::CanonicalField(ParamStore& store, const FieldConfig& config) : cfg_(config) {
  NetworkShapes shapes =
      network_shapes(cfg_.profile, cfg_.parts, cfg_.latent_dim, cfg_.geometry_skip);
  feature_dim_ = shapes.feature_dim;
  geometry_ = Mlp(store, "field.geometry", shapes.geometry);
  color_ = Mlp(store, "field.color", shapes.color);
  appearance_ = &store.create("field.appearance", cfg_.frames, cfg_.latent_dim);
  if (cfg_.mode == GeometryMode::Sdf) {
    beta_ = &store.create("field.beta", 1, 1);
    beta_->value(0, 0) = cfg_.beta_init;
  }
}

CanonicalField::Geometry CanonicalField::query_geometry(Graph& g, Var x_canonical) const {
  if (!g.value(x_canonical).allFinite())
    throw InvalidArgumentError("query_geometry: non-finite point");
  Var enc = positional_encoding(g, x_canonical, kXyzFrequencies);
  Var out = geometry_.forward(g, enc);
  Var raw = g.slice_cols(out, 0, 1);
  Var z = g.slice_cols(out, 1, feature_dim_);
  Var geom = cfg_.mode == GeometryMode::Density ? g.softplus(raw) : raw;
  return {geom, z};
}

Var CanonicalField::query_color(Graph& g, Var z, Var d_canonical, int frame) const {
  const int rows = static_cast<int>(g.value(z).rows());
  Var enc_d = positional_encoding(g, d_canonical, kDirFrequencies);
  Var code = g.param_row(*appearance_, frame, rows);
  Var out = color_.forward(g, g.concat_cols({z, enc_d, code}));
  return g.sigmoid(out);
}

Var CanonicalField::density(Graph& g, Var geometry) const {
  if (cfg_.mode == GeometryMode::Density) return geometry;
  return sdf_to_density(g, geometry, g.param(*beta_));
}

double CanonicalField::beta_value() const {
  if (beta_ == nullptr) throw InvalidStateError("beta: density-mode field");
  return beta_->value(0, 0);
}

void CanonicalField::clamp_beta() {
  if (beta_ != nullptr && beta_->value(0, 0) < kBetaFloor) beta_->value(0, 0) = kBetaFloor;
}

void CanonicalField::init(Rng& rng) {
  geometry_.init_default(rng);
  color_.init_default(rng);
  // appearance codes start at zero
  if (cfg_.mode == GeometryMode::Sdf) {
    // Bias the raw distance slightly positive so training starts from a thin
    // haze instead of a solid block; rgb and mask terms carve from there.
    geometry_.bias(geometry_.layer_count() - 1).value(0, 0) = 0.1;
  }
}

}  // namespace anif
