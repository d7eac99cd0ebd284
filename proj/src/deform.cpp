// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/deform.hpp"

namespace anif {

Mat flatten_transforms(const PartTransforms& transforms) {
  const int k = transforms.part_count();
  Mat flat(k, 12);
  for (int p = 0; p < k; ++p) {
    const Mat3& r = transforms.parts[p].rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) flat(p, i * 3 + j) = r(i, j);
    flat.block<1, 3>(p, 9) = transforms.parts[p].translation.transpose();
  }
  return flat;
}

WeightedTransform blend_transforms(const Vec& weights, const PartTransforms& transforms) {
  if (weights.size() != transforms.part_count())
    throw InvalidArgumentError("blend_transforms: weight length mismatch");
  WeightedTransform wt{Mat3::Zero(), Vec3::Zero()};
  for (int p = 0; p < transforms.part_count(); ++p) {
    wt.rotation += weights[p] * transforms.parts[p].rotation;
    wt.translation += weights[p] * transforms.parts[p].translation;
  }
  return wt;
}

Vec3 lbs_inverse(const Vec3& x, const Vec& weights, const PartTransforms& transforms) {
  WeightedTransform wt = blend_transforms(weights, transforms);
  if (std::abs(wt.rotation.determinant()) <= 1e-8)
    throw SingularBlendError("lbs_inverse: blended transform is singular");
  return wt.rotation.inverse() * (x - wt.translation);
}

Vec3 canonicalize_direction(const Vec3& d, const WeightedTransform& wt) {
  if (std::abs(d.norm() - 1.0) > 1e-6)
    throw InvalidArgumentError("canonicalize_direction: direction must be unit length");
  Vec3 out = wt.rotation * d;
  const double n = out.norm();
  if (n < 1e-8) throw DegenerateDirectionError("canonicalize_direction: vanishing direction");
  return out / n;
}

DeformationModel::DeformationModel(ParamStore& store, const DeformConfig& config) : cfg_(config) {
  NetworkShapes shapes = network_shapes(cfg_.profile, cfg_.parts, cfg_.latent_dim);
  if (cfg_.variant == DeformVariant::Nbw) {
    residual_ = Mlp(store, "deform.residual", shapes.weight_residual);
    psi_ = &store.create("deform.psi", cfg_.frames, cfg_.latent_dim);
    psi_can_ = &store.create("deform.psi_canonical", 1, cfg_.latent_dim);
  } else if (cfg_.variant == DeformVariant::Pdf) {
    displacement_ = Mlp(store, "deform.displacement", shapes.displacement);
  }
}

DeformationModel DeformationModel::nbw_override(const Mlp& residual, Parameter& psi) {
  DeformationModel m;
  m.cfg_.variant = DeformVariant::Nbw;
  m.cfg_.frames = static_cast<int>(psi.value.rows());
  m.residual_ = residual;
  m.psi_ = &psi;
  return m;
}

void DeformationModel::init(Rng& rng) {
  if (cfg_.variant == DeformVariant::Nbw) {
    residual_.init_default(rng);
    residual_.init_final_layer_uniform(rng, 1e-4);
  } else if (cfg_.variant == DeformVariant::Pdf) {
    displacement_.init_default(rng);
    displacement_.init_final_layer_uniform(rng, 1e-4);
  }
}

FrameContext make_frame_context(const SkinnedTemplate& tmpl, const Pose& pose,
                                const Pose& canonical_pose, double padding) {
  FrameContext ctx;
  ctx.pose = pose;
  ctx.pose_flat = pose.flattened();
  ctx.transforms = part_transforms(tmpl.skeleton, pose, canonical_pose);
  ctx.transforms_flat = flatten_transforms(ctx.transforms);
  ctx.posed_vertices = pose_mesh(tmpl, ctx.transforms);
  ctx.grid = VertexGrid(ctx.posed_vertices);
  ctx.box = points_aabb(ctx.posed_vertices, padding);
  return ctx;
}

Mat batch_blend_weights(const SkinnedTemplate& tmpl, const VertexGrid& grid, const Mat& points) {
  Mat out(points.rows(), tmpl.part_count());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.row(i) = tmpl.weights.row(grid.nearest(points.row(i).transpose()));
  return out;
}

Vec nbw_weights(const Vec3& x, const Mlp& residual, const Parameter& psi_table, int row,
                const Vec& w_s) {
  Mat input(1, residual.config().input_dim);
  input << positional_encoding(x.transpose(), kDeformXyzFrequencies), psi_table.value.row(row);
  Vec w = residual.forward_plain(input).row(0).transpose() + w_s;
  w = w.cwiseMax(0.0);
  const double sum = w.sum();
  if (sum < 1e-8) throw DegenerateWeightsError("nbw_weights: clamped weights sum to zero");
  return w / sum;
}

Var nbw_weight_field(Graph& g, const Mlp& residual, const Parameter& psi_table, int row, Var x,
                     const Mat& w_s) {
  const int rows = static_cast<int>(g.value(x).rows());
  Var enc = positional_encoding(g, x, kDeformXyzFrequencies);
  Var psi = g.param_row(psi_table, row, rows);
  Var resid = residual.forward(g, g.concat_cols({enc, psi}));
  Var w = g.relu(g.add(resid, g.constant(w_s)));
  Var sums = g.clamp(g.row_sum(w), 1e-8, 1e300);
  return g.div_col(w, sums);
}

Vec3 warp_nbw(const Vec3& x, const Mlp& residual, const Parameter& psi_table, int row,
              const Vec& w_s, const PartTransforms& transforms) {
  return lbs_inverse(x, nbw_weights(x, residual, psi_table, row, w_s), transforms);
}

Vec3 warp_pdf(const Vec3& x, const Mlp& displacement, const Vec& pose_flat, const Vec& w_s,
              const PartTransforms& transforms) {
  const Vec3 xc = lbs_inverse(x, w_s, transforms);
  Mat input(1, displacement.config().input_dim);
  input << positional_encoding(xc.transpose(), kDeformXyzFrequencies), pose_flat.transpose();
  return xc + displacement.forward_plain(input).row(0).transpose();
}

namespace {

// R* d from the flattened blend rows (N x 12) and constant directions.
Var rotate_dirs(Graph& g, Var blend, const Mat& dirs) {
  Var d = g.constant(dirs);
  std::vector<Var> comps;
  for (int r = 0; r < 3; ++r)
    comps.push_back(g.row_sum(g.mul(g.slice_cols(blend, r * 3, 3), d)));
  Var rd = g.concat_cols(comps);
  Var norm = g.clamp(g.row_l2_norm(rd), 1e-8, 1e300);
  return g.div_col(rd, norm);
}

}  // namespace

WarpResult warp_points(Graph& g, const DeformationModel& model, const SkinnedTemplate& tmpl,
                       const FrameContext& ctx, int frame, const Mat& x_obs,
                       const Mat* dirs_obs) {
  WarpResult out;
  const Eigen::Index n = x_obs.rows();
  Mat w_s = batch_blend_weights(tmpl, ctx.grid, x_obs);

  if (model.variant() == DeformVariant::Nbw) {
    Var x = g.constant(x_obs);
    Var w = nbw_weight_field(g, model.residual_net(), model.psi(), frame, x, w_s);
    Var blend = g.matmul_const(w, ctx.transforms_flat);
    Var rot = g.slice_cols(blend, 0, 9);
    Var trans = g.slice_cols(blend, 9, 3);
    Var solved = g.solve3x3(rot, g.sub(x, trans));
    out.points = solved;
    out.weights = w;
    out.singular = g.singular_rows(solved);
    if (dirs_obs != nullptr) out.directions = rotate_dirs(g, blend, *dirs_obs);
    return out;
  }

  // Smpl and Pdf blend with constant template weights; the articulated part
  // of the warp carries no gradient.
  Mat blend = w_s * ctx.transforms_flat;  // N x 12
  Mat xc(n, 3);
  Mat dirs_c(dirs_obs != nullptr ? n : 0, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat3 rstar;
    rstar << blend(i, 0), blend(i, 1), blend(i, 2), blend(i, 3), blend(i, 4), blend(i, 5),
        blend(i, 6), blend(i, 7), blend(i, 8);
    const Vec3 t = blend.block<1, 3>(i, 9).transpose();
    if (std::abs(rstar.determinant()) <= 1e-8) {
      out.singular.push_back(static_cast<int>(i));
      xc.row(i).setZero();
      if (dirs_obs != nullptr) dirs_c.row(i) = Vec3::UnitZ().transpose();
      continue;
    }
    xc.row(i) = (rstar.inverse() * (x_obs.row(i).transpose() - t)).transpose();
    if (dirs_obs != nullptr) {
      Vec3 rd = rstar * dirs_obs->row(i).transpose();
      const double norm = rd.norm();
      const Vec3 dir = norm < 1e-8 ? Vec3::UnitZ() : Vec3(rd / norm);
      dirs_c.row(i) = dir.transpose();
    }
  }
  if (dirs_obs != nullptr) out.directions = g.constant(dirs_c);

  if (model.variant() == DeformVariant::Smpl) {
    out.points = g.constant(xc);
    return out;
  }

  Var xc_var = g.constant(xc);
  Var enc = positional_encoding(g, xc_var, kDeformXyzFrequencies);
  Var pose = g.constant(ctx.pose_flat.transpose().replicate(n, 1));
  Var disp = model.displacement_net().forward(g, g.concat_cols({enc, pose}));
  out.displacement = disp;
  out.points = g.add(xc_var, disp);
  return out;
}

}  // namespace anif
