// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/body_model.hpp"
#include "anif/nets.hpp"

namespace anif {

// The weight-blended rigid transform sum_k w_k G_k.
struct WeightedTransform {
  Mat3 rotation;  // R*, not exactly orthogonal once weights mix parts
  Vec3 translation;
};

// Part transforms flattened to K x 12 rows [r00..r22, tx, ty, tz]; blending
// is then a single matrix product with the weight rows.
Mat flatten_transforms(const PartTransforms& transforms);

WeightedTransform blend_transforms(const Vec& weights, const PartTransforms& transforms);

// x' = R*^-1 (x - t). Throws SingularBlendError when |det R*| <= 1e-8.
Vec3 lbs_inverse(const Vec3& x, const Vec& weights, const PartTransforms& transforms);

// Canonical-space view direction R* d, renormalized.
Vec3 canonicalize_direction(const Vec3& d, const WeightedTransform& wt);

enum class DeformVariant { Smpl, Nbw, Pdf };

struct DeformConfig {
  DeformVariant variant = DeformVariant::Pdf;
  Profile profile = Profile::Desk;
  int frames = 1;
  int parts = 24;
  int latent_dim = kLatentDim;
};

// Pose-driven warp from observation to canonical space. The Smpl variant
// uses template weights alone, Nbw adds a learned residual on the weights,
// Pdf adds a displacement after the inverse-skinning step.
class DeformationModel {
 public:
  DeformationModel() = default;
  DeformationModel(ParamStore& store, const DeformConfig& config);

  // Nbw view over an externally owned residual net and latent table; used by
  // the animation stage, which trains its own copies.
  static DeformationModel nbw_override(const Mlp& residual, Parameter& psi);

  DeformVariant variant() const { return cfg_.variant; }
  const DeformConfig& config() const { return cfg_; }
  Mlp& residual_net() { return residual_; }
  const Mlp& residual_net() const { return residual_; }
  Mlp& displacement_net() { return displacement_; }
  const Mlp& displacement_net() const { return displacement_; }
  Parameter& psi() { return *psi_; }
  const Parameter& psi() const { return *psi_; }
  Parameter& psi_canonical() { return *psi_can_; }
  const Parameter& psi_canonical() const { return *psi_can_; }

  void init(Rng& rng);

 private:
  DeformConfig cfg_;
  Mlp residual_;      // F_dw (Nbw)
  Mlp displacement_;  // F_dx (Pdf)
  Parameter* psi_ = nullptr;
  Parameter* psi_can_ = nullptr;
};

// Everything per-frame the warp needs, precomputed once.
struct FrameContext {
  Pose pose;
  Vec pose_flat;        // 3K
  PartTransforms transforms;
  Mat transforms_flat;  // K x 12
  Mat posed_vertices;
  VertexGrid grid;
  Aabb box;
};

FrameContext make_frame_context(const SkinnedTemplate& tmpl, const Pose& pose,
                                const Pose& canonical_pose, double padding);

// Template blend weights of the nearest posed vertex, one row per query.
Mat batch_blend_weights(const SkinnedTemplate& tmpl, const VertexGrid& grid, const Mat& points);

// Neural blend weight field: norm(relu(F_dw(enc(x), psi_row) + w_s)).
// The batched form clamps near-zero row sums instead of throwing; rows that
// degenerate end up singular in the blend and are skipped by the renderer.
Vec nbw_weights(const Vec3& x, const Mlp& residual, const Parameter& psi_table, int row,
                const Vec& w_s);
Var nbw_weight_field(Graph& g, const Mlp& residual, const Parameter& psi_table, int row, Var x,
                     const Mat& w_s);

// Plain single-point warps (the batched graph path lives in warp_points).
Vec3 warp_nbw(const Vec3& x, const Mlp& residual, const Parameter& psi_table, int row,
              const Vec& w_s, const PartTransforms& transforms);
Vec3 warp_pdf(const Vec3& x, const Mlp& displacement, const Vec& pose_flat, const Vec& w_s,
              const PartTransforms& transforms);

struct WarpResult {
  Var points;              // N x 3 canonical
  Var directions;          // N x 3 canonical unit directions (if dirs given)
  Var weights;             // N x K observation-space weights (Nbw only)
  Var displacement;        // N x 3 (Pdf only)
  std::vector<int> singular;  // rows whose blend was skipped
};

// Batched observation-to-canonical warp on a graph. `frame` selects the psi
// row for the Nbw variant; `x_obs` rows are observation-space points.
WarpResult warp_points(Graph& g, const DeformationModel& model, const SkinnedTemplate& tmpl,
                       const FrameContext& ctx, int frame, const Mat& x_obs,
                       const Mat* dirs_obs = nullptr);

}  // namespace anif
