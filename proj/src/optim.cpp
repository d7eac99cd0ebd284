// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/optim.hpp"

#include <cmath>

namespace anif {

double lr_schedule(int64_t iter, int64_t total_iters, double lr_start, double decay_factor) {
  if (iter < 0 || iter > total_iters || total_iters <= 0)
    throw InvalidArgumentError("lr_schedule: iter out of range");
  return lr_start * std::pow(decay_factor, static_cast<double>(iter) / total_iters);
}

Mat& Adam::moment(std::vector<Mat>& store, const Parameter& p) {
  if (static_cast<int>(store.size()) <= p.id) store.resize(p.id + 1);
  Mat& m = store[p.id];
  if (m.rows() != p.value.rows() || m.cols() != p.value.cols())
    m = Mat::Zero(p.value.rows(), p.value.cols());
  return m;
}

void Adam::step(ParamStore& params, const std::function<const Mat*(const Parameter&)>& grad_of,
                double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (int id = 0; id < params.size(); ++id) {
    Parameter& p = params.at(id);
    const Mat* g = grad_of(p);
    if (g != nullptr) {
      if (g->rows() != p.value.rows() || g->cols() != p.value.cols())
        throw InvalidArgumentError("adam: gradient shape mismatch for " + p.name);
      if (!g->allFinite())
        throw TrainingDivergedError("adam: non-finite gradient for " + p.name);
    }
    Mat& m = moment(m_, p);
    Mat& v = moment(v_, p);
    if (g != nullptr) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * (*g);
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g->cwiseProduct(*g);
    } else {
      m *= cfg_.beta1;
      v *= cfg_.beta2;
    }
    p.value.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace anif
