// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/dataset.hpp"
#include "anif/losses.hpp"
#include "anif/render.hpp"

namespace anif {

struct TrainConfig {
  Variant variant = Variant::NerfPdf;
  int iterations = 20000;
  int rays_per_batch = 1024;
  int reg_points = 512;  // per regularization point set per step
  uint64_t seed = 1;
  Profile profile = Profile::Desk;
  int checkpoint_every = 5000;
  int samples_per_ray = kDefaultSamplesPerRay;
  int threads = 1;
  double aabb_padding = 0.05;
  int novel_iterations = 2000;  // animation-stage budget (Nbw)

  void validate() const;
  static TrainConfig load(const std::string& path);
  void save(const std::string& path) const;
};

// One optimization batch: rays of a single frame with their observed colors
// and mask values. 80% of the pixels come from the dilated foreground box.
struct RayBatch {
  int frame = 0;
  std::vector<int> camera;  // per ray
  std::vector<int> row, col;
  std::vector<Ray> rays;
  Mat gt_rgb;   // N x 3
  Vec gt_mask;  // N

  int size() const { return static_cast<int>(rays.size()); }
};

RayBatch sample_ray_batch(const FrameDataset& data, Rng& rng, int batch_size);
Mat sample_box_points(const Aabb& box, int n, Rng& rng);

class Trainer {
 public:
  Trainer(Model& model, const FrameDataset& data, const TrainConfig& config);

  LossReport train_step(int64_t iter);
  LossReport train_step(const RayBatch& batch, int64_t iter);

  // Full run: CSV log + periodic checkpoints + final model.anif under
  // out_dir. On divergence a crash checkpoint is written and the error
  // rethrown.
  void fit(const std::string& out_dir);

  TrainState& state() { return state_; }
  const FrameContext& frame_context(int frame) const { return contexts_[frame]; }
  const TrainConfig& config() const { return cfg_; }

  static constexpr int kChunkRays = 64;
  static constexpr int kChunkPoints = 256;

 private:
  Model& model_;
  const FrameDataset& data_;
  TrainConfig cfg_;
  TrainState state_;
  std::vector<FrameContext> contexts_;
};

// Euclidean distance between flattened axis-angle vectors; lowest frame
// index wins ties.
int select_nearest_latent(const std::vector<Pose>& training_poses, const Pose& novel_pose);

// Animation-stage optimization for the Nbw variant: a fresh residual net
// (final layer zeroed, so the field starts exactly at the template weights)
// plus one zero-initialized latent per novel pose, trained to agree with the
// frozen canonical weight field. Main-model parameters are never stepped.
struct NovelPoseFit {
  ParamStore params;
  Mlp residual;
  Parameter* psi = nullptr;
  std::vector<double> initial_loss;  // per pose, fixed evaluation set
  std::vector<double> final_loss;
  int iterations = 0;
};

NovelPoseFit fit_novel_pose_weights(const Model& model, const std::vector<Pose>& novel_poses,
                                    const TrainConfig& config);
void save_novel_fit(const std::string& path, const NovelPoseFit& fit);

// Deterministic pairwise reduction; the tree shape depends only on the item
// count, so totals are identical for any thread count.
template <typename T, typename F>
T tree_reduce(std::vector<T> items, F combine) {
  if (items.empty()) throw InvalidArgumentError("tree_reduce: empty");
  while (items.size() > 1) {
    std::vector<T> next;
    next.reserve((items.size() + 1) / 2);
    for (size_t i = 0; i + 1 < items.size(); i += 2)
      next.push_back(combine(std::move(items[i]), std::move(items[i + 1])));
    if (items.size() % 2 == 1) next.push_back(std::move(items.back()));
    items = std::move(next);
  }
  return std::move(items[0]);
}

}  // namespace anif
