// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/losses.hpp"

#include <cmath>

namespace anif {

Var rgb_loss(Graph& g, Var predicted, const Mat& observed) {
  const Mat& pv = g.value(predicted);
  if (pv.rows() != observed.rows() || pv.cols() != 3 || observed.cols() != 3)
    throw InvalidArgumentError("rgb_loss: batch shape mismatch");
  Var diff = g.sub(predicted, g.constant(observed));
  return g.scale(g.sum_all(g.row_l2_norm(diff)), 1.0 / pv.rows());
}

double rgb_loss(const Mat& predicted, const Mat& observed) {
  if (predicted.rows() != observed.rows() || predicted.cols() != 3 || observed.cols() != 3)
    throw InvalidArgumentError("rgb_loss: batch shape mismatch");
  return (predicted - observed).rowwise().norm().sum() / predicted.rows();
}

double rho_schedule(int64_t iter) {
  if (iter < 0) throw InvalidArgumentError("rho_schedule: negative iteration");
  const int64_t doublings = std::min<int64_t>(iter / 10000, 5);
  return 50.0 * static_cast<double>(int64_t{1} << doublings);
}

static void check_mask(const Vec& mask) {
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0 && mask[i] != 1.0)
      throw InvalidArgumentError("mask_loss: mask values must be 0 or 1");
}

Var mask_loss(Graph& g, Var min_sdf, const Vec& mask, double rho) {
  const Mat& sv = g.value(min_sdf);
  if (sv.cols() != 1 || sv.rows() != mask.size())
    throw InvalidArgumentError("mask_loss: shape mismatch");
  check_mask(mask);
  Var p = g.clamp(g.sigmoid(g.scale(min_sdf, -rho)), kBceClamp, 1.0 - kBceClamp);
  Var log_p = g.log(p);
  Var log_q = g.log(g.add_scalar(g.scale(p, -1.0), 1.0));
  Mat m = mask;
  Mat one_minus = (1.0 - mask.array()).matrix();
  Var bce = g.scale(g.add(g.mul(log_p, g.constant(std::move(m))),
                          g.mul(log_q, g.constant(std::move(one_minus)))),
                    -1.0);
  return g.scale(g.sum_all(bce), 1.0 / sv.rows());
}

double mask_loss(const Vec& min_sdf, const Vec& mask, double rho) {
  if (min_sdf.size() != mask.size()) throw InvalidArgumentError("mask_loss: shape mismatch");
  check_mask(mask);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < min_sdf.size(); ++i) {
    const double x = -rho * min_sdf[i];
    double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    p = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
    acc -= mask[i] * std::log(p) + (1.0 - mask[i]) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(min_sdf.size());
}

Var eikonal_penalty(Graph& g, Var stencil, double h) {
  const Mat& sv = g.value(stencil);
  if (sv.cols() != 6) throw InvalidArgumentError("eikonal_penalty: expected N x 6 stencil");
  std::vector<Var> grads;
  for (int a = 0; a < 3; ++a)
    grads.push_back(g.scale(
        g.sub(g.slice_cols(stencil, 2 * a, 1), g.slice_cols(stencil, 2 * a + 1, 1)),
        1.0 / (2.0 * h)));
  Var norm = g.row_l2_norm(g.concat_cols(grads));
  Var dev = g.square(g.add_scalar(norm, -1.0));
  return g.scale(g.sum_all(dev), 1.0 / sv.rows());
}

Var eikonal_loss(Graph& g, const Model& model, const FrameContext& ctx, int frame,
                 const Mat& points) {
  if (model.mode() != GeometryMode::Sdf)
    throw InvalidVariantError("eikonal_loss: requires an sdf-mode model");
  std::vector<Var> cols;
  for (int a = 0; a < 3; ++a) {
    for (double sign : {1.0, -1.0}) {
      Mat shifted = points;
      shifted.col(a).array() += sign * kEikonalStep;
      WarpResult warp = warp_points(g, model.deform, model.tmpl, ctx, frame, shifted);
      cols.push_back(model.field.query_geometry(g, warp.points).g);
    }
  }
  return eikonal_penalty(g, g.concat_cols(cols), kEikonalStep);
}

Var consistency_loss(Graph& g, Var w_observation, Var w_canonical) {
  const Mat& a = g.value(w_observation);
  const Mat& b = g.value(w_canonical);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgumentError("consistency_loss: shape mismatch");
  Var diff = g.sub(w_observation, w_canonical);
  return g.scale(g.sum_all(g.row_l1_norm(diff)), 1.0 / a.rows());
}

double consistency_loss(const Mat& w_observation, const Mat& w_canonical) {
  if (w_observation.rows() != w_canonical.rows() ||
      w_observation.cols() != w_canonical.cols())
    throw InvalidArgumentError("consistency_loss: shape mismatch");
  return (w_observation - w_canonical).cwiseAbs().rowwise().sum().sum() /
         w_observation.rows();
}

Var displacement_reg(Graph& g, Var displacements) {
  const Mat& d = g.value(displacements);
  return g.scale(g.sum_all(g.row_l2_norm(displacements)), 1.0 / d.rows());
}

double displacement_reg(const Mat& displacements) {
  if (displacements.rows() == 0) return 0.0;
  return displacements.rowwise().norm().sum() / displacements.rows();
}

static double require(const std::optional<double>& term, const char* name) {
  if (!term.has_value())
    throw InvalidStateError(std::string("total_loss: missing required term ") + name);
  return *term;
}

double total_loss(Variant variant, const LossReport& parts) {
  switch (variant) {
    case Variant::NerfNbw:
      return require(parts.rgb, "rgb") + require(parts.nsf, "nsf");
    case Variant::NerfPdf:
      return require(parts.rgb, "rgb") + kDisplacementWeight * require(parts.dx, "dx");
    case Variant::SdfPdf:
      return require(parts.rgb, "rgb") + require(parts.mask, "mask") +
             kEikonalWeight * require(parts.eikonal, "eikonal") +
             kDisplacementWeight * require(parts.dx, "dx");
  }
  throw InvalidArgumentError("total_loss: unknown variant");
}

}  // namespace anif
