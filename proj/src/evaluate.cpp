// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "anif/marching_cubes_tables.inl"

namespace anif {

void TriMesh::validate() const {
  if (!vertices.allFinite()) throw InvalidArgumentError("mesh: non-finite vertex");
  for (int f = 0; f < faces.rows(); ++f)
    for (int c = 0; c < 3; ++c)
      if (faces(f, c) < 0 || faces(f, c) >= vertices.rows())
        throw InvalidArgumentError("mesh: face index out of range");
}

double TriMesh::surface_area() const {
  double area = 0.0;
  for (int f = 0; f < faces.rows(); ++f) {
    const Vec3 a = vertices.row(faces(f, 0)).transpose();
    const Vec3 b = vertices.row(faces(f, 1)).transpose();
    const Vec3 c = vertices.row(faces(f, 2)).transpose();
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

namespace {

// local cube edge -> (corner offset of the canonical lower end, axis)
struct EdgeRef {
  int dx, dy, dz, axis;
};
// Bourke cube layout: corners 0-3 ring the z plane, 4-7 the z+1 plane.
constexpr EdgeRef kEdgeRefs[12] = {
    {0, 0, 0, 0},  // 0: 0-1
    {1, 0, 0, 1},  // 1: 1-2
    {0, 1, 0, 0},  // 2: 2-3
    {0, 0, 0, 1},  // 3: 3-0
    {0, 0, 1, 0},  // 4: 4-5
    {1, 0, 1, 1},  // 5: 5-6
    {0, 1, 1, 0},  // 6: 6-7
    {0, 0, 1, 1},  // 7: 7-4
    {0, 0, 0, 2},  // 8: 0-4
    {1, 0, 0, 2},  // 9: 1-5
    {1, 1, 0, 2},  // 10: 2-6
    {0, 1, 0, 2},  // 11: 3-7
};

}  // namespace

TriMesh marching_cubes(const ScalarField& field, const Aabb& box, int resolution, double iso,
                       bool inside_below) {
  if (resolution < 2) throw InvalidArgumentError("marching_cubes: resolution must be >= 2");
  const int res = resolution;
  const Vec3 step = box.extent() / (res - 1);
  std::vector<double> values(static_cast<size_t>(res) * res * res);
  auto vidx = [res](int x, int y, int z) {
    return (static_cast<size_t>(z) * res + y) * res + x;
  };
  auto vpos = [&](int x, int y, int z) {
    return Vec3(box.min.x() + x * step.x(), box.min.y() + y * step.y(),
                box.min.z() + z * step.z());
  };
  const double flip = inside_below ? 1.0 : -1.0;
  for (int z = 0; z < res; ++z)
    for (int y = 0; y < res; ++y)
      for (int x = 0; x < res; ++x) values[vidx(x, y, z)] = flip * field(vpos(x, y, z));
  const double level = flip * iso;

  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> tris;
  std::unordered_map<int64_t, int> edge_vertex;
  const int corner_off[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

  // Interpolation always runs from the canonical lower grid vertex along the
  // +axis direction, so vertex positions do not depend on the field's sign.
  auto edge_point = [&](int x, int y, int z, int edge) {
    const EdgeRef& e = kEdgeRefs[edge];
    const int lx = x + e.dx, ly = y + e.dy, lz = z + e.dz;
    const int64_t key = static_cast<int64_t>(vidx(lx, ly, lz)) * 3 + e.axis;
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const int ux = lx + (e.axis == 0), uy = ly + (e.axis == 1), uz = lz + (e.axis == 2);
    const double v0 = values[vidx(lx, ly, lz)];
    const double v1 = values[vidx(ux, uy, uz)];
    const double t = std::abs(v1 - v0) < 1e-300 ? 0.5 : (level - v0) / (v1 - v0);
    const Vec3 p = vpos(lx, ly, lz) + t * (vpos(ux, uy, uz) - vpos(lx, ly, lz));
    const int id = static_cast<int>(verts.size());
    verts.push_back(p);
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int z = 0; z + 1 < res; ++z)
    for (int y = 0; y + 1 < res; ++y)
      for (int x = 0; x + 1 < res; ++x) {
        int cube = 0;
        for (int c = 0; c < 8; ++c)
          if (values[vidx(x + corner_off[c][0], y + corner_off[c][1], z + corner_off[c][2])] <
              level)
            cube |= 1 << c;
        if (kEdgeTable[cube] == 0) continue;
        int ev[12];
        for (int e = 0; e < 12; ++e)
          if (kEdgeTable[cube] & (1 << e)) ev[e] = edge_point(x, y, z, e);
        for (int t = 0; kTriTable[cube][t] != -1; t += 3)
          tris.push_back({ev[kTriTable[cube][t]], ev[kTriTable[cube][t + 1]],
                          ev[kTriTable[cube][t + 2]]});
      }

  TriMesh mesh;
  mesh.vertices.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(i) = verts[i].transpose();
  mesh.faces.resize(tris.size(), 3);
  for (size_t i = 0; i < tris.size(); ++i) mesh.faces.row(i) = tris[i].transpose();
  return mesh;
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // closest point on triangle (Ericson, Real-Time Collision Detection)
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + (d1 / (d1 - d3)) * ab)).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + (d2 / (d2 - d6)) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const Vec3 closest = a + ab * (vb * denom) + ac * (vc * denom);
  return (p - closest).norm();
}

namespace {

// Uniform grid over triangle bounding boxes with the same shell-search bound
// as VertexGrid; triangles register in every cell their bbox overlaps.
class TriangleGrid {
 public:
  explicit TriangleGrid(const TriMesh& mesh) : mesh_(&mesh) {
    Vec3 lo = mesh.vertices.colwise().minCoeff().transpose();
    Vec3 hi = mesh.vertices.colwise().maxCoeff().transpose();
    Vec3 ext = (hi - lo).array().max(1e-9);
    const int nf = static_cast<int>(mesh.faces.rows());
    cell_ = std::max(std::cbrt(ext.prod() / std::max(1, nf)), 1e-6);
    for (int a = 0; a < 3; ++a)
      dims_[a] = std::clamp(static_cast<int>(std::ceil(ext[a] / cell_)), 1, 64);
    for (int a = 0; a < 3; ++a) cell_ = std::max(cell_, ext[a] / dims_[a] * (1 + 1e-12));
    origin_ = lo;
    cells_.resize(static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2]);
    for (int f = 0; f < nf; ++f) {
      Vec3 bmin = mesh.vertices.row(mesh.faces(f, 0)).transpose();
      Vec3 bmax = bmin;
      for (int c = 1; c < 3; ++c) {
        bmin = bmin.cwiseMin(mesh.vertices.row(mesh.faces(f, c)).transpose());
        bmax = bmax.cwiseMax(mesh.vertices.row(mesh.faces(f, c)).transpose());
      }
      int lo_c[3], hi_c[3];
      for (int a = 0; a < 3; ++a) {
        lo_c[a] = std::clamp(static_cast<int>((bmin[a] - origin_[a]) / cell_), 0, dims_[a] - 1);
        hi_c[a] = std::clamp(static_cast<int>((bmax[a] - origin_[a]) / cell_), 0, dims_[a] - 1);
      }
      for (int z = lo_c[2]; z <= hi_c[2]; ++z)
        for (int y = lo_c[1]; y <= hi_c[1]; ++y)
          for (int x = lo_c[0]; x <= hi_c[0]; ++x) cells_[index(x, y, z)].push_back(f);
    }
    stamp_.assign(nf, -1);
  }

  double distance(const Vec3& q) {
    int c0[3];
    for (int a = 0; a < 3; ++a)
      c0[a] = std::clamp(static_cast<int>((q[a] - origin_[a]) / cell_), 0, dims_[a] - 1);
    double best = std::numeric_limits<double>::infinity();
    const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
    ++query_;
    for (int s = 0; s <= max_ring; ++s) {
      if (best < std::numeric_limits<double>::infinity()) {
        const double bound = (s - 1) * cell_;
        if (bound > 0.0 && bound > best) break;
      }
      const int xlo = std::max(c0[0] - s, 0), xhi = std::min(c0[0] + s, dims_[0] - 1);
      const int ylo = std::max(c0[1] - s, 0), yhi = std::min(c0[1] + s, dims_[1] - 1);
      const int zlo = std::max(c0[2] - s, 0), zhi = std::min(c0[2] + s, dims_[2] - 1);
      for (int z = zlo; z <= zhi; ++z)
        for (int y = ylo; y <= yhi; ++y)
          for (int x = xlo; x <= xhi; ++x) {
            if (std::max({std::abs(x - c0[0]), std::abs(y - c0[1]), std::abs(z - c0[2])}) != s)
              continue;
            for (int f : cells_[index(x, y, z)]) {
              if (stamp_[f] == query_) continue;
              stamp_[f] = query_;
              best = std::min(
                  best, point_triangle_distance(
                            q, mesh_->vertices.row(mesh_->faces(f, 0)).transpose(),
                            mesh_->vertices.row(mesh_->faces(f, 1)).transpose(),
                            mesh_->vertices.row(mesh_->faces(f, 2)).transpose()));
            }
          }
    }
    return best;
  }

 private:
  const TriMesh* mesh_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  int dims_[3] = {1, 1, 1};
  std::vector<std::vector<int>> cells_;
  std::vector<int64_t> stamp_;
  int64_t query_ = 0;

  size_t index(int x, int y, int z) const {
    return (static_cast<size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }
};

Mat sample_surface(const TriMesh& mesh, int samples, uint64_t seed) {
  std::vector<double> cum(mesh.faces.rows());
  double total = 0.0;
  for (int f = 0; f < mesh.faces.rows(); ++f) {
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0)).transpose();
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1)).transpose();
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2)).transpose();
    total += 0.5 * (b - a).cross(c - a).norm();
    cum[f] = total;
  }
  if (total <= 0.0) throw InvalidArgumentError("p2s: degenerate mesh (zero area)");
  Rng rng(seed);
  Mat points(samples, 3);
  for (int i = 0; i < samples; ++i) {
    const double u = rng.uniform() * total;
    const int f = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    double b1 = rng.uniform(), b2 = rng.uniform();
    if (b1 + b2 > 1.0) {
      b1 = 1.0 - b1;
      b2 = 1.0 - b2;
    }
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0)).transpose();
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1)).transpose();
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2)).transpose();
    points.row(i) = (a + b1 * (b - a) + b2 * (c - a)).transpose();
  }
  return points;
}

}  // namespace

double p2s(const TriMesh& mesh, const TriMesh& reference, int samples, uint64_t seed) {
  if (mesh.empty() || reference.empty()) throw InvalidArgumentError("p2s: empty mesh");
  if (samples < 1) throw InvalidArgumentError("p2s: need at least one sample");
  Mat points = sample_surface(mesh, samples, seed);
  TriangleGrid grid(reference);
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) acc += grid.distance(points.row(i).transpose());
  return acc / samples * 100.0;  // meters -> centimeters
}

double chamfer(const TriMesh& mesh, const TriMesh& reference, int samples, uint64_t seed) {
  return 0.5 * (p2s(mesh, reference, samples, seed) + p2s(reference, mesh, samples, seed));
}

ProjectedBox project_bbox_mask(const Aabb& box, const Camera& camera) {
  std::vector<Eigen::Vector2d> pts;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner(c & 1 ? box.max.x() : box.min.x(), c & 2 ? box.max.y() : box.min.y(),
                      c & 4 ? box.max.z() : box.min.z());
    double u, v;
    if (camera.project(corner, u, v)) pts.push_back({u, v});
  }
  ProjectedBox out;
  out.mask = MaskImage(camera.width, camera.height);
  if (pts.size() < 3) return out;

  // Andrew monotone chain, counter-clockwise hull
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const size_t lower = k + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k > 1 ? k - 1 : 0);
  if (hull.size() < 3) return out;

  double ulo = hull[0].x(), uhi = hull[0].x(), vlo = hull[0].y(), vhi = hull[0].y();
  for (const auto& p : hull) {
    ulo = std::min(ulo, p.x());
    uhi = std::max(uhi, p.x());
    vlo = std::min(vlo, p.y());
    vhi = std::max(vhi, p.y());
  }
  const int c0 = std::clamp(static_cast<int>(std::floor(ulo)), 0, camera.width);
  const int c1 = std::clamp(static_cast<int>(std::ceil(uhi)), 0, camera.width);
  const int r0 = std::clamp(static_cast<int>(std::floor(vlo)), 0, camera.height);
  const int r1 = std::clamp(static_cast<int>(std::ceil(vhi)), 0, camera.height);
  int mc0 = camera.width, mc1 = 0, mr0 = camera.height, mr1 = 0;
  for (int row = r0; row < r1; ++row)
    for (int col = c0; col < c1; ++col) {
      const Eigen::Vector2d p(col + 0.5, row + 0.5);
      bool inside = true;
      for (size_t i = 0; i < hull.size() && inside; ++i)
        inside = cross(hull[i], hull[(i + 1) % hull.size()], p) >= 0;
      if (inside) {
        out.mask.at(row, col) = 1;
        mc0 = std::min(mc0, col);
        mc1 = std::max(mc1, col + 1);
        mr0 = std::min(mr0, row);
        mr1 = std::max(mr1, row + 1);
      }
    }
  if (mc1 > mc0) {
    out.col0 = mc0;
    out.col1 = mc1;
    out.row0 = mr0;
    out.row1 = mr1;
  }
  return out;
}

double psnr(const Image& a, const Image& b, const MaskImage& region) {
  if (a.width != b.width || a.height != b.height || a.width != region.width ||
      a.height != region.height)
    throw InvalidArgumentError("psnr: dimension mismatch");
  int64_t count = 0;
  double acc = 0.0;
  for (int row = 0; row < a.height; ++row)
    for (int col = 0; col < a.width; ++col) {
      if (!region.at(row, col)) continue;
      ++count;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(row, col, c) - b.at(row, col, c);
        acc += d * d;
      }
    }
  if (count == 0) throw InvalidArgumentError("psnr: empty region");
  const double mse = acc / (3.0 * count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(10.0 * std::log10(1.0 / mse), kPsnrCap);
}

double ssim(const Image& a, const Image& b, int col0, int row0, int col1, int row1) {
  if (a.width != b.width || a.height != b.height)
    throw InvalidArgumentError("ssim: dimension mismatch");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  col0 = std::max(col0, 0);
  row0 = std::max(row0, 0);
  col1 = std::min(col1, a.width);
  row1 = std::min(row1, a.height);
  if (col1 - col0 < kWin || row1 - row0 < kWin)
    throw InvalidArgumentError("ssim: crop must be at least 11 x 11");

  double kernel[kWin][kWin];
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double di = i - kWin / 2, dj = j - kWin / 2;
      kernel[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
      ksum += kernel[i][j];
    }
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) kernel[i][j] /= ksum;

  double acc = 0.0;
  int64_t count = 0;
  for (int c = 0; c < 3; ++c)
    for (int row = row0; row + kWin <= row1; ++row)
      for (int col = col0; col + kWin <= col1; ++col) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double w = kernel[i][j];
            const double x = a.at(row + i, col + j, c);
            const double y = b.at(row + i, col + j, c);
            mx += w * x;
            my += w * y;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cxy = sxy - mx * my;
        acc += ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
               ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        ++count;
      }
  return acc / count;
}

}  // namespace anif
