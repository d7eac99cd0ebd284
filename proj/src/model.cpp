// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/model.hpp"

#include <bit>

namespace anif {

GeometryMode geometry_mode(Variant v) {
  return v == Variant::SdfPdf ? GeometryMode::Sdf : GeometryMode::Density;
}

DeformVariant deform_variant(Variant v) {
  return v == Variant::NerfNbw ? DeformVariant::Nbw : DeformVariant::Pdf;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::NerfNbw: return "nerf-nbw";
    case Variant::NerfPdf: return "nerf-pdf";
    case Variant::SdfPdf: return "sdf-pdf";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "nerf-nbw") return Variant::NerfNbw;
  if (name == "nerf-pdf") return Variant::NerfPdf;
  if (name == "sdf-pdf") return Variant::SdfPdf;
  throw InvalidArgumentError("unknown variant: " + name);
}

Model build_model(const ModelConfig& config, SkinnedTemplate tmpl, Pose canonical_pose) {
  tmpl.validate();
  if (canonical_pose.joint_count() != tmpl.skeleton.joint_count())
    throw InvalidArgumentError("model: canonical pose length mismatch");
  Model m;
  m.config = config;
  m.tmpl = std::move(tmpl);
  m.canonical_pose = std::move(canonical_pose);

  FieldConfig fc;
  fc.mode = geometry_mode(config.variant);
  fc.profile = config.profile;
  fc.frames = config.frames;
  fc.parts = m.tmpl.part_count();
  fc.geometry_skip = config.geometry_skip;
  fc.beta_init = config.beta_init;
  m.field = CanonicalField(m.params, fc);

  DeformConfig dc;
  dc.variant = deform_variant(config.variant);
  dc.profile = config.profile;
  dc.frames = config.frames;
  dc.parts = m.tmpl.part_count();
  m.deform = DeformationModel(m.params, dc);

  Rng rng(config.init_seed);
  m.field.init(rng);
  m.deform.init(rng);

  m.canonical_grid = VertexGrid(m.tmpl.vertices);
  m.canonical_box = points_aabb(m.tmpl.vertices, config.aabb_padding);
  return m;
}

static double bits_to_double(uint64_t u) { return std::bit_cast<double>(u); }
static uint64_t double_to_bits(double d) { return std::bit_cast<uint64_t>(d); }

void save_checkpoint(const std::string& path, const Model& model, const TrainState* state) {
  Checkpoint ckpt;
  ckpt.add_scalar("meta.variant", static_cast<double>(static_cast<int>(model.config.variant)));
  ckpt.add_scalar("meta.profile", model.config.profile == Profile::Paper ? 1.0 : 0.0);
  ckpt.add_scalar("meta.frames", model.config.frames);
  ckpt.add_scalar("meta.geometry_skip", model.config.geometry_skip);
  ckpt.add_scalar("meta.beta_init", model.config.beta_init);
  ckpt.add_scalar("meta.aabb_padding", model.config.aabb_padding);
  ckpt.add_scalar("meta.init_seed", bits_to_double(model.config.init_seed));
  for (int id = 0; id < model.params.size(); ++id) {
    const Parameter& p = model.params.at(id);
    ckpt.add("param." + p.name, p.value);
  }
  if (state != nullptr) {
    ckpt.add_scalar("train.iteration", static_cast<double>(state->iteration));
    ckpt.add_scalar("train.adam.steps", static_cast<double>(state->adam.step_count()));
    ckpt.add_scalar("train.rng.state", bits_to_double(state->rng.state()));
    ckpt.add_scalar("train.rng.inc", bits_to_double(state->rng.inc()));
    Adam& adam = const_cast<TrainState*>(state)->adam;
    for (int id = 0; id < model.params.size(); ++id) {
      const Parameter& p = model.params.at(id);
      ckpt.add("adam.m." + p.name, adam.first_moment(p));
      ckpt.add("adam.v." + p.name, adam.second_moment(p));
    }
  }
  ckpt.write(path);
}

Model load_checkpoint(const std::string& path, SkinnedTemplate tmpl, Pose canonical_pose,
                      TrainState* state) {
  Checkpoint ckpt = Checkpoint::read(path);
  ModelConfig config;
  config.variant = static_cast<Variant>(static_cast<int>(ckpt.scalar("meta.variant")));
  config.profile = ckpt.scalar("meta.profile") != 0.0 ? Profile::Paper : Profile::Desk;
  config.frames = static_cast<int>(ckpt.scalar("meta.frames"));
  config.geometry_skip = static_cast<int>(ckpt.scalar("meta.geometry_skip"));
  config.beta_init = ckpt.scalar("meta.beta_init");
  config.aabb_padding = ckpt.scalar("meta.aabb_padding");
  config.init_seed = double_to_bits(ckpt.scalar("meta.init_seed"));

  Model model = build_model(config, std::move(tmpl), std::move(canonical_pose));
  for (int id = 0; id < model.params.size(); ++id) {
    Parameter& p = model.params.at(id);
    const Mat& v = ckpt.tensor("param." + p.name);
    if (v.rows() != p.value.rows() || v.cols() != p.value.cols())
      throw IoError("checkpoint: shape mismatch for " + p.name);
    p.value = v;
  }
  if (state != nullptr) {
    if (!ckpt.has("train.iteration"))
      throw IoError("checkpoint has no optimizer state: " + path);
    state->iteration = static_cast<int64_t>(ckpt.scalar("train.iteration"));
    state->adam.set_step_count(static_cast<int64_t>(ckpt.scalar("train.adam.steps")));
    state->rng.set_state(double_to_bits(ckpt.scalar("train.rng.state")),
                         double_to_bits(ckpt.scalar("train.rng.inc")));
    for (int id = 0; id < model.params.size(); ++id) {
      const Parameter& p = model.params.at(id);
      state->adam.first_moment(p) = ckpt.tensor("adam.m." + p.name);
      state->adam.second_moment(p) = ckpt.tensor("adam.v." + p.name);
    }
  }
  return model;
}

}  // namespace anif
