// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/dataset.hpp"

#include <cstdio>
#include <filesystem>

namespace anif {

namespace fs = std::filesystem;

std::string frame_name(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", frame);
  return buf;
}

std::string image_path(const std::string& root, int camera, int frame) {
  return root + "/images/" + std::to_string(camera) + "/" + frame_name(frame) + ".png";
}

std::string mask_path(const std::string& root, int camera, int frame) {
  return root + "/masks/" + std::to_string(camera) + "/" + frame_name(frame) + ".png";
}

std::string pose_path(const std::string& root, int frame) {
  return root + "/poses/" + frame_name(frame) + ".json";
}

PixelRect dilated_mask_rect(const MaskImage& mask, int dilation) {
  int c0 = mask.width, c1 = -1, r0 = mask.height, r1 = -1;
  for (int row = 0; row < mask.height; ++row)
    for (int col = 0; col < mask.width; ++col)
      if (mask.at(row, col)) {
        c0 = std::min(c0, col);
        c1 = std::max(c1, col);
        r0 = std::min(r0, row);
        r1 = std::max(r1, row);
      }
  if (c1 < 0) return {0, 0, mask.width, mask.height};
  PixelRect rect;
  rect.col0 = std::max(0, c0 - dilation);
  rect.row0 = std::max(0, r0 - dilation);
  rect.col1 = std::min(mask.width, c1 + 1 + dilation);
  rect.row1 = std::min(mask.height, r1 + 1 + dilation);
  return rect;
}

void FrameDataset::validate() const {
  if (poses.empty()) throw InvalidArgumentError("dataset: no frames");
  if (cameras.empty()) throw InvalidArgumentError("dataset: no cameras");
  tmpl.validate();
  for (const Pose& p : poses)
    if (p.joint_count() != tmpl.skeleton.joint_count())
      throw InvalidArgumentError("dataset: pose joint count mismatch");
  for (int c = 0; c < camera_count(); ++c) {
    if (static_cast<int>(images[c].size()) != frame_count())
      throw InvalidArgumentError("dataset: image count mismatch");
    for (const Image& img : images[c])
      if (img.width != cameras[c].width || img.height != cameras[c].height)
        throw InvalidArgumentError("dataset: image size mismatch");
    if (!masks.empty())
      for (const MaskImage& m : masks[c])
        if (m.width != cameras[c].width || m.height != cameras[c].height)
          throw InvalidArgumentError("dataset: mask size mismatch");
  }
}

FrameDataset load_dataset(const std::string& dir) {
  if (!fs::exists(dir)) throw IoError("dataset directory not found: " + dir);
  FrameDataset ds;
  ds.root = dir;
  ds.cameras = load_cameras(dir + "/cameras.json");
  ds.tmpl.skeleton = load_skeleton(dir + "/skeleton.json");
  load_obj(dir + "/template.obj", ds.tmpl.vertices, ds.tmpl.faces);
  ds.tmpl.weights = load_weights(dir + "/template.weights", ds.tmpl.vertex_count());
  if (fs::exists(dir + "/canonical_pose.json"))
    ds.canonical_pose = load_pose(dir + "/canonical_pose.json");
  else
    ds.canonical_pose = Pose::rest(ds.tmpl.skeleton.joint_count());

  for (int frame = 0;; ++frame) {
    const std::string path = pose_path(dir, frame);
    if (!fs::exists(path)) break;
    ds.poses.push_back(load_pose(path));
  }
  if (ds.poses.empty()) throw IoError("dataset has no poses: " + dir);

  const bool with_masks = fs::exists(dir + "/masks");
  ds.images.resize(ds.cameras.size());
  if (with_masks) {
    ds.masks.resize(ds.cameras.size());
    ds.mask_rects.resize(ds.cameras.size());
  }
  for (int c = 0; c < ds.camera_count(); ++c) {
    for (int f = 0; f < ds.frame_count(); ++f) {
      ds.images[c].push_back(load_png(image_path(dir, c, f)));
      if (with_masks) {
        ds.masks[c].push_back(load_mask_png(mask_path(dir, c, f)));
        ds.mask_rects[c].push_back(dilated_mask_rect(ds.masks[c].back(), kMaskDilationPx));
      }
    }
  }
  ds.validate();
  return ds;
}

}  // namespace anif
