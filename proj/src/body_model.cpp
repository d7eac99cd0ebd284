// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace anif {

void SkinnedTemplate::validate() const {
  const int v = vertex_count();
  if (v == 0) throw InvalidStateError("template: empty mesh");
  if (weights.rows() != v) throw InvalidArgumentError("template: weight rows != V");
  for (int i = 0; i < v; ++i) {
    double sum = 0.0;
    for (int k = 0; k < weights.cols(); ++k) {
      if (weights(i, k) < 0.0) throw InvalidArgumentError("template: negative blend weight");
      sum += weights(i, k);
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InvalidArgumentError("template: weight row does not sum to 1");
  }
  for (int f = 0; f < faces.rows(); ++f)
    for (int c = 0; c < 3; ++c)
      if (faces(f, c) < 0 || faces(f, c) >= v)
        throw InvalidArgumentError("template: face index out of range");
}

Mat pose_mesh(const SkinnedTemplate& tmpl, const PartTransforms& transforms) {
  if (transforms.part_count() != tmpl.part_count())
    throw InvalidArgumentError("pose_mesh: part count mismatch");
  const int v = tmpl.vertex_count();
  const int k = tmpl.part_count();
  Mat out(v, 3);
  for (int i = 0; i < v; ++i) {
    Mat3 rot = Mat3::Zero();
    Vec3 trans = Vec3::Zero();
    for (int p = 0; p < k; ++p) {
      const double w = tmpl.weights(i, p);
      if (w == 0.0) continue;
      rot += w * transforms.parts[p].rotation;
      trans += w * transforms.parts[p].translation;
    }
    out.row(i) = (rot * tmpl.vertices.row(i).transpose() + trans).transpose();
  }
  return out;
}

int nearest_vertex_bruteforce(const Mat& points, const Vec3& q) {
  if (points.rows() == 0) throw InvalidStateError("nearest vertex: empty point set");
  int best = 0;
  double best_d2 = (points.row(0).transpose() - q).squaredNorm();
  for (int i = 1; i < points.rows(); ++i) {
    const double d2 = (points.row(i).transpose() - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

VertexGrid::VertexGrid(const Mat& points) : points_(points) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw InvalidStateError("vertex grid: empty point set");
  Vec3 lo = points.colwise().minCoeff().transpose();
  Vec3 hi = points.colwise().maxCoeff().transpose();
  Vec3 ext = (hi - lo).array().max(1e-9);
  double target = std::cbrt(ext.prod() / std::max(1, n));
  cell_ = std::max(target, 1e-6);
  for (int a = 0; a < 3; ++a) {
    dims_[a] = std::clamp(static_cast<int>(std::ceil(ext[a] / cell_)), 1, 64);
  }
  // widen the cell so the clamped dims still cover the extent
  for (int a = 0; a < 3; ++a) cell_ = std::max(cell_, ext[a] / dims_[a] * (1 + 1e-12));
  origin_ = lo;

  const int ncells = dims_[0] * dims_[1] * dims_[2];
  std::vector<int> count(ncells + 1, 0);
  std::vector<int> cell_of(n);
  for (int i = 0; i < n; ++i) {
    int c[3];
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(static_cast<int>((points(i, a) - origin_[a]) / cell_), 0, dims_[a] - 1);
    cell_of[i] = cell_index(c[0], c[1], c[2]);
    ++count[cell_of[i] + 1];
  }
  for (int c = 0; c < ncells; ++c) count[c + 1] += count[c];
  cell_start_ = count;
  order_.resize(n);
  std::vector<int> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (int i = 0; i < n; ++i) order_[cursor[cell_of[i]]++] = i;  // stable: ascending index per cell
}

int VertexGrid::nearest(const Vec3& q) const {
  int c0[3];
  for (int a = 0; a < 3; ++a)
    c0[a] = std::clamp(static_cast<int>((q[a] - origin_[a]) / cell_), 0, dims_[a] - 1);
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int s = 0; s <= max_ring; ++s) {
    if (best >= 0) {
      const double bound = (s - 1) * cell_;
      if (bound > 0.0 && bound * bound > best_d2) break;
    }
    const int xlo = std::max(c0[0] - s, 0), xhi = std::min(c0[0] + s, dims_[0] - 1);
    const int ylo = std::max(c0[1] - s, 0), yhi = std::min(c0[1] + s, dims_[1] - 1);
    const int zlo = std::max(c0[2] - s, 0), zhi = std::min(c0[2] + s, dims_[2] - 1);
    for (int z = zlo; z <= zhi; ++z)
      for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x) {
          const int cheb = std::max({std::abs(x - c0[0]), std::abs(y - c0[1]), std::abs(z - c0[2])});
          if (cheb != s) continue;  // only the new shell
          const int ci = cell_index(x, y, z);
          for (int it = cell_start_[ci]; it < cell_start_[ci + 1]; ++it) {
            const int i = order_[it];
            const double d2 = (points_.row(i).transpose() - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
              best_d2 = d2;
              best = i;
            }
          }
        }
  }
  return best;
}

Vec query_blend_weights(const SkinnedTemplate& tmpl, const Mat& posed_vertices, const Vec3& x) {
  if (posed_vertices.rows() == 0) throw InvalidStateError("query_blend_weights: empty mesh");
  return tmpl.weights.row(nearest_vertex_bruteforce(posed_vertices, x)).transpose();
}

Vec query_blend_weights(const SkinnedTemplate& tmpl, const VertexGrid& grid, const Vec3& x) {
  return tmpl.weights.row(grid.nearest(x)).transpose();
}

Aabb points_aabb(const Mat& points, double padding) {
  if (padding < 0.0) throw InvalidArgumentError("aabb: negative padding");
  if (points.rows() == 0) throw InvalidArgumentError("aabb: empty point set");
  Aabb box{points.colwise().minCoeff().transpose(), points.colwise().maxCoeff().transpose()};
  return box.padded(padding);
}

Aabb posed_aabb(const SkinnedTemplate& tmpl, const PartTransforms& transforms, double padding) {
  return points_aabb(pose_mesh(tmpl, transforms), padding);
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  return (p - closest_point_on_segment(p, a, b)).norm();
}

CapsuleBodySpec CapsuleBodySpec::humanoid() {
  // SMPL-like 24-joint topology, T pose, Y up, facing +Z. Joint offsets are
  // parent-relative (root absolute).
  CapsuleBodySpec spec;
  spec.skeleton.parents = {-1, 0, 0, 0,  1,  2,  3,  4,  5,  6,  7,  8,
                           9,  9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  const double offsets[24][3] = {
      {0.00, 0.95, 0.00},    // 0 pelvis
      {0.09, -0.05, 0.00},   // 1 l_hip
      {-0.09, -0.05, 0.00},  // 2 r_hip
      {0.00, 0.10, 0.00},    // 3 spine1
      {0.00, -0.40, 0.00},   // 4 l_knee
      {0.00, -0.40, 0.00},   // 5 r_knee
      {0.00, 0.12, 0.00},    // 6 spine2
      {0.00, -0.42, 0.00},   // 7 l_ankle
      {0.00, -0.42, 0.00},   // 8 r_ankle
      {0.00, 0.12, 0.00},    // 9 spine3
      {0.00, -0.05, 0.12},   // 10 l_foot
      {0.00, -0.05, 0.12},   // 11 r_foot
      {0.00, 0.10, 0.00},    // 12 neck
      {0.08, 0.05, 0.00},    // 13 l_collar
      {-0.08, 0.05, 0.00},   // 14 r_collar
      {0.00, 0.08, 0.00},    // 15 head
      {0.12, 0.00, 0.00},    // 16 l_shoulder
      {-0.12, 0.00, 0.00},   // 17 r_shoulder
      {0.26, 0.00, 0.00},    // 18 l_elbow
      {-0.26, 0.00, 0.00},   // 19 r_elbow
      {0.25, 0.00, 0.00},    // 20 l_wrist
      {-0.25, 0.00, 0.00},   // 21 r_wrist
      {0.08, 0.00, 0.00},    // 22 l_hand
      {-0.08, 0.00, 0.00},   // 23 r_hand
  };
  spec.skeleton.joints.resize(24, 3);
  for (int i = 0; i < 24; ++i)
    for (int c = 0; c < 3; ++c) spec.skeleton.joints(i, c) = offsets[i][c];
  const double radii[24] = {0.105, 0.070, 0.070, 0.100, 0.055, 0.055, 0.110, 0.045,
                            0.045, 0.110, 0.040, 0.040, 0.045, 0.060, 0.060, 0.090,
                            0.045, 0.045, 0.040, 0.040, 0.035, 0.035, 0.030, 0.030};
  spec.radii.resize(24);
  spec.leaf_tip_length = Vec::Constant(24, 0.07);
  for (int i = 0; i < 24; ++i) spec.radii[i] = radii[i];
  spec.leaf_tip_length[10] = spec.leaf_tip_length[11] = 0.08;  // feet
  spec.leaf_tip_length[15] = 0.12;                             // head
  return spec;
}

BoneSet compute_bones(const CapsuleBodySpec& spec) {
  const Skeleton& skel = spec.skeleton;
  skel.validate();
  const int k = skel.joint_count();
  if (spec.radii.size() != k) throw InvalidArgumentError("capsule body: radii size != K");
  if ((spec.radii.array() <= 0.0).any())
    throw InvalidArgumentError("capsule body: radii must be positive");
  Mat world = joint_positions(skel, Pose::rest(k));
  std::vector<int> first_child(k, -1);
  for (int i = 0; i < k; ++i)
    if (skel.parents[i] >= 0 && first_child[skel.parents[i]] < 0) first_child[skel.parents[i]] = i;
  BoneSet bones;
  bones.a.resize(k, 3);
  bones.b.resize(k, 3);
  for (int i = 0; i < k; ++i) {
    const Vec3 start = world.row(i).transpose();
    Vec3 end;
    if (first_child[i] >= 0) {
      end = world.row(first_child[i]).transpose();
    } else {
      Vec3 dir = Vec3::UnitY();
      if (skel.parents[i] >= 0) {
        Vec3 d = start - world.row(skel.parents[i]).transpose();
        if (d.norm() > 1e-12) dir = d.normalized();
      }
      end = start + spec.leaf_tip_length[i] * dir;
    }
    if ((end - start).norm() < 1e-9)
      throw InvalidArgumentError("capsule body: degenerate bone " + std::to_string(i));
    bones.a.row(i) = start.transpose();
    bones.b.row(i) = end.transpose();
  }
  return bones;
}

namespace {

void orthonormal_frame(const Vec3& w, Vec3& u, Vec3& v) {
  Vec3 ref = std::abs(w.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = w.cross(ref).normalized();
  v = w.cross(u);
}

// Rows of capsule vertices plus faces, appended to the output buffers.
void append_capsule(const Vec3& a, const Vec3& b, double radius, int seg, int cap_rings,
                    std::vector<Vec3>& verts, std::vector<Eigen::Vector3i>& faces) {
  const Vec3 w = (b - a).normalized();
  Vec3 u, v;
  orthonormal_frame(w, u, v);
  const int base = static_cast<int>(verts.size());

  // levels: bottom pole, bottom cap rings, top cap rings, top pole
  std::vector<int> level_start;
  verts.push_back(a - radius * w);  // bottom pole
  for (int i = 1; i <= cap_rings; ++i) {
    const double ang = -0.5 * kPi + 0.5 * kPi * i / cap_rings;
    const Vec3 c = a + radius * std::sin(ang) * w;
    const double r = radius * std::cos(ang);
    level_start.push_back(static_cast<int>(verts.size()));
    for (int t = 0; t < seg; ++t) {
      const double th = 2.0 * kPi * t / seg;
      verts.push_back(c + r * (std::cos(th) * u + std::sin(th) * v));
    }
  }
  for (int i = 0; i < cap_rings; ++i) {
    const double ang = 0.5 * kPi * i / cap_rings;
    const Vec3 c = b + radius * std::sin(ang) * w;
    const double r = radius * std::cos(ang);
    level_start.push_back(static_cast<int>(verts.size()));
    for (int t = 0; t < seg; ++t) {
      const double th = 2.0 * kPi * t / seg;
      verts.push_back(c + r * (std::cos(th) * u + std::sin(th) * v));
    }
  }
  const int top_pole = static_cast<int>(verts.size());
  verts.push_back(b + radius * w);

  const int rings = static_cast<int>(level_start.size());
  auto ring_vertex = [&](int ring, int t) { return level_start[ring] + (t % seg); };
  for (int t = 0; t < seg; ++t)
    faces.push_back({base, ring_vertex(0, t + 1), ring_vertex(0, t)});
  for (int r = 0; r + 1 < rings; ++r)
    for (int t = 0; t < seg; ++t) {
      const int a0 = ring_vertex(r, t), a1 = ring_vertex(r, t + 1);
      const int b0 = ring_vertex(r + 1, t), b1 = ring_vertex(r + 1, t + 1);
      faces.push_back({a0, a1, b1});
      faces.push_back({a0, b1, b0});
    }
  for (int t = 0; t < seg; ++t)
    faces.push_back({top_pole, ring_vertex(rings - 1, t), ring_vertex(rings - 1, t + 1)});
}

}  // namespace

SkinnedTemplate build_capsule_body(const CapsuleBodySpec& spec) {
  BoneSet bones = compute_bones(spec);
  const int k = spec.skeleton.joint_count();
  const int seg = std::max(4, spec.resolution);
  const int cap_rings = std::max(2, spec.resolution / 2);

  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;
  for (int p = 0; p < k; ++p)
    append_capsule(bones.a.row(p).transpose(), bones.b.row(p).transpose(), spec.radii[p], seg,
                   cap_rings, verts, faces);

  SkinnedTemplate tmpl;
  tmpl.skeleton = spec.skeleton;
  tmpl.vertices.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) tmpl.vertices.row(i) = verts[i].transpose();
  tmpl.faces.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) tmpl.faces.row(i) = faces[i].transpose();

  tmpl.weights = Mat::Zero(verts.size(), k);
  for (size_t i = 0; i < verts.size(); ++i) {
    const Vec3 p = verts[i];
    int n0 = -1, n1 = -1;
    double d0 = std::numeric_limits<double>::infinity();
    double d1 = std::numeric_limits<double>::infinity();
    for (int bidx = 0; bidx < k; ++bidx) {
      const double d =
          point_segment_distance(p, bones.a.row(bidx).transpose(), bones.b.row(bidx).transpose());
      if (d < d0) {
        d1 = d0;
        n1 = n0;
        d0 = d;
        n0 = bidx;
      } else if (d < d1) {
        d1 = d;
        n1 = bidx;
      }
    }
    if (d0 < 1e-12 || n1 < 0) {
      tmpl.weights(i, n0) = 1.0;
    } else {
      const double w0 = 1.0 / (d0 * d0);
      const double w1 = 1.0 / (d1 * d1);
      tmpl.weights(i, n0) = w0 / (w0 + w1);
      tmpl.weights(i, n1) = w1 / (w0 + w1);
    }
  }
  tmpl.validate();
  return tmpl;
}

void save_obj(const Mat& vertices, const Eigen::Matrix<int, -1, 3>& faces,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[160];
  for (int i = 0; i < vertices.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", vertices(i, 0), vertices(i, 1),
                  vertices(i, 2));
    out << buf;
  }
  for (int f = 0; f < faces.rows(); ++f) {
    std::snprintf(buf, sizeof(buf), "f %d %d %d\n", faces(f, 0) + 1, faces(f, 1) + 1,
                  faces(f, 2) + 1);
    out << buf;
  }
  if (!out) throw IoError("failed while writing " + path);
}

void load_obj(const std::string& path, Mat& vertices, Eigen::Matrix<int, -1, 3>& faces) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Vec3> vs;
  std::vector<Eigen::Vector3i> fs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 p;
      ss >> p.x() >> p.y() >> p.z();
      vs.push_back(p);
    } else if (tag == "f") {
      Eigen::Vector3i f;
      for (int c = 0; c < 3; ++c) {
        std::string tok;
        ss >> tok;
        f[c] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      fs.push_back(f);
    }
  }
  vertices.resize(vs.size(), 3);
  for (size_t i = 0; i < vs.size(); ++i) vertices.row(i) = vs[i].transpose();
  faces.resize(fs.size(), 3);
  for (size_t i = 0; i < fs.size(); ++i) faces.row(i) = fs[i].transpose();
}

void save_weights(const Mat& weights, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[40];
  for (int i = 0; i < weights.rows(); ++i) {
    for (int k = 0; k < weights.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", weights(i, k));
      out << (k ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

Mat load_weights(const std::string& path, int expected_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (static_cast<int>(rows.size()) != expected_rows)
    throw IoError("weights file " + path + ": expected " + std::to_string(expected_rows) +
                  " rows, found " + std::to_string(rows.size()));
  Mat w(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<size_t>(w.cols()))
      throw IoError("weights file " + path + ": ragged rows");
    for (size_t j = 0; j < rows[i].size(); ++j) w(i, j) = rows[i][j];
  }
  return w;
}

}  // namespace anif
