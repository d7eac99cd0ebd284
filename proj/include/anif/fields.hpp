// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/nets.hpp"

namespace anif {

enum class GeometryMode { Density, Sdf };

// Laplace-CDF transform of a signed distance into a density:
//   s < 0:  (1/beta) (1 - exp(s/beta)/2)
//   s >= 0: (1/(2 beta)) exp(-s/beta)
// Continuous and C1 at s = 0, tends to 1/beta inside and 0 outside.
double sdf_to_density(double s, double beta);
// Graph version; beta is a 1x1 node so its gradient flows.
Var sdf_to_density(Graph& g, Var s, Var beta);

struct FieldConfig {
  GeometryMode mode = GeometryMode::Density;
  Profile profile = Profile::Desk;
  int frames = 1;
  int parts = 24;
  int geometry_skip = 5;
  double beta_init = 0.1;
  int latent_dim = kLatentDim;
};

// Canonical human model: geometry net (density or signed distance plus a
// shape feature), color net conditioned on the canonical view direction and
// a per-frame appearance code, and the learnable density sharpness beta.
class CanonicalField {
 public:
  CanonicalField() = default;
  CanonicalField(ParamStore& store, const FieldConfig& config);

  struct Geometry {
    Var g;  // N x 1: density (softplus-activated) or raw signed distance
    Var z;  // N x feature_dim
  };
  Geometry query_geometry(Graph& g, Var x_canonical) const;

  // d_canonical: N x 3 unit directions; appearance code row `frame`.
  Var query_color(Graph& g, Var z, Var d_canonical, int frame) const;

  // Density used by the renderer: identity in density mode, the Laplace
  // transform of the signed distance in sdf mode.
  Var density(Graph& g, Var geometry) const;

  GeometryMode mode() const { return cfg_.mode; }
  int feature_dim() const { return feature_dim_; }
  const FieldConfig& config() const { return cfg_; }
  Mlp& geometry_net() { return geometry_; }
  const Mlp& geometry_net() const { return geometry_; }
  Mlp& color_net() { return color_; }
  const Mlp& color_net() const { return color_; }
  Parameter& appearance() { return *appearance_; }
  const Parameter& appearance() const { return *appearance_; }
  Parameter* beta() { return beta_; }
  const Parameter* beta() const { return beta_; }
  double beta_value() const;
  void clamp_beta();  // beta >= 1e-4 after optimizer steps

  void init(Rng& rng);

  static constexpr double kBetaFloor = 1e-4;

 private:
  FieldConfig cfg_;
  int feature_dim_ = 0;
  Mlp geometry_;
  Mlp color_;
  Parameter* appearance_ = nullptr;
  Parameter* beta_ = nullptr;
};

}  // namespace anif
