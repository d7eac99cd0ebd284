// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "anif/body_model.hpp"
#include "anif/camera.hpp"
#include "anif/image.hpp"

namespace anif {

struct PixelRect {
  int col0 = 0, row0 = 0, col1 = 0, row1 = 0;  // half-open

  int width() const { return col1 - col0; }
  int height() const { return row1 - row0; }
};

// On-disk layout:
//   cameras.json skeleton.json canonical_pose.json template.obj
//   template.weights poses/%06d.json images/<cam>/%06d.png
//   masks/<cam>/%06d.png  [gt/mesh_%06d.obj gt/canonical_mesh.obj]
struct FrameDataset {
  std::vector<Camera> cameras;
  SkinnedTemplate tmpl;
  Pose canonical_pose;
  std::vector<Pose> poses;
  std::vector<std::vector<Image>> images;      // [camera][frame]
  std::vector<std::vector<MaskImage>> masks;   // [camera][frame]
  std::vector<std::vector<PixelRect>> mask_rects;  // dilated mask bboxes
  std::string root;

  int frame_count() const { return static_cast<int>(poses.size()); }
  int camera_count() const { return static_cast<int>(cameras.size()); }
  bool has_masks() const { return !masks.empty() && !masks[0].empty(); }
  void validate() const;
};

inline constexpr int kMaskDilationPx = 16;

std::string frame_name(int frame);  // zero-padded six digits
std::string image_path(const std::string& root, int camera, int frame);
std::string mask_path(const std::string& root, int camera, int frame);
std::string pose_path(const std::string& root, int frame);

FrameDataset load_dataset(const std::string& dir);

// Bounding box of the mask's foreground, dilated and clamped; full image
// when the mask is empty.
PixelRect dilated_mask_rect(const MaskImage& mask, int dilation);

}  // namespace anif
