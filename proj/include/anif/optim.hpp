// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "anif/graph.hpp"

namespace anif {

// lr(i) = 5e-4 * 0.1^(i / total): 5e-4 at the start, 5e-5 at the end.
double lr_schedule(int64_t iter, int64_t total_iters, double lr_start = 5e-4,
                   double decay_factor = 0.1);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over every parameter of a store. Moments are
// kept per parameter id; a missing gradient counts as zero (dense update).
class Adam {
 public:
  Adam() = default;
  explicit Adam(const AdamConfig& config) : cfg_(config) {}

  // grad_of returns the gradient for a parameter or nullptr for zero.
  void step(ParamStore& params, const std::function<const Mat*(const Parameter&)>& grad_of,
            double lr);

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

  // Checkpoint access.
  Mat& first_moment(const Parameter& p) { return moment(m_, p); }
  Mat& second_moment(const Parameter& p) { return moment(v_, p); }
  void set_step_count(int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<Mat> m_, v_;
  int64_t t_ = 0;

  Mat& moment(std::vector<Mat>& store, const Parameter& p);
};

}  // namespace anif
