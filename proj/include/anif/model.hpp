// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/checkpoint.hpp"
#include "anif/deform.hpp"
#include "anif/fields.hpp"
#include "anif/optim.hpp"

namespace anif {

// The three trained representations: density field with neural blend
// weights, density field with a displacement field, signed distance field
// with a displacement field.
enum class Variant { NerfNbw, NerfPdf, SdfPdf };

GeometryMode geometry_mode(Variant v);
DeformVariant deform_variant(Variant v);
std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::NerfPdf;
  Profile profile = Profile::Desk;
  int frames = 1;
  int geometry_skip = 5;
  double beta_init = 0.1;
  double aabb_padding = 0.05;
  uint64_t init_seed = 1;
};

// The full trainable bundle: canonical field + deformation model + the
// skinned template they are tied to.
struct Model {
  ModelConfig config;
  SkinnedTemplate tmpl;
  Pose canonical_pose;
  ParamStore params;
  CanonicalField field;
  DeformationModel deform;
  VertexGrid canonical_grid;  // over template vertices (canonical pose)
  Aabb canonical_box;

  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  GeometryMode mode() const { return field.mode(); }
  int parts() const { return tmpl.part_count(); }
  FrameContext frame_context(const Pose& pose) const {
    return make_frame_context(tmpl, pose, canonical_pose, config.aabb_padding);
  }
};

Model build_model(const ModelConfig& config, SkinnedTemplate tmpl, Pose canonical_pose);

// Optimizer + RNG + iteration bundle stored alongside parameters so an
// interrupted run resumes on the exact trajectory.
struct TrainState {
  Adam adam;
  Rng rng{0};
  int64_t iteration = 0;
};

void save_checkpoint(const std::string& path, const Model& model, const TrainState* state);
Model load_checkpoint(const std::string& path, SkinnedTemplate tmpl, Pose canonical_pose,
                      TrainState* state = nullptr);

}  // namespace anif
