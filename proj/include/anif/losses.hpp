// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "anif/model.hpp"

namespace anif {

inline constexpr double kEikonalWeight = 0.01;
inline constexpr double kDisplacementWeight = 0.01;
inline constexpr double kEikonalStep = 1e-3;  // meters, central differences
inline constexpr double kBceClamp = 1e-7;

// Mean over rays of || C_pred - C_obs ||_2 (norm, not squared).
Var rgb_loss(Graph& g, Var predicted, const Mat& observed);
double rgb_loss(const Mat& predicted, const Mat& observed);

// rho = 50 * 2^min(floor(iter/10000), 5)
double rho_schedule(int64_t iter);

// Mean BCE(sigmoid(-rho * min_sdf), mask), probabilities clamped before log.
Var mask_loss(Graph& g, Var min_sdf, const Vec& mask, double rho);
double mask_loss(const Vec& min_sdf, const Vec& mask, double rho);

// Mean (||grad|| - 1)^2 from a 6-point stencil of geometry values laid out
// as columns [x+, x-, y+, y-, z+, z-].
Var eikonal_penalty(Graph& g, Var stencil, double h = kEikonalStep);
// Convenience: builds the stencil through the model's warp + geometry.
Var eikonal_loss(Graph& g, const Model& model, const FrameContext& ctx, int frame,
                 const Mat& points);

// Mean L1 distance between observation- and canonical-space weight rows.
Var consistency_loss(Graph& g, Var w_observation, Var w_canonical);
double consistency_loss(const Mat& w_observation, const Mat& w_canonical);

// Mean Euclidean norm of predicted displacements.
Var displacement_reg(Graph& g, Var displacements);
double displacement_reg(const Mat& displacements);

struct LossReport {
  std::optional<double> rgb;
  std::optional<double> mask;
  std::optional<double> eikonal;
  std::optional<double> nsf;
  std::optional<double> dx;
  int rays = 0;
  int points = 0;
  double total = 0.0;
};

// The per-variant combination, accumulated left to right exactly as
// declared:  nerf-nbw: rgb + nsf
//            nerf-pdf: rgb + 0.01 dx
//            sdf-pdf:  rgb + mask + 0.01 eikonal + 0.01 dx
double total_loss(Variant variant, const LossReport& parts);

}  // namespace anif
