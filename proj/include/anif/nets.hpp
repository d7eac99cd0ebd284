// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "anif/graph.hpp"

namespace anif {

// [v, sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^{L-1} pi v), cos(2^{L-1} pi v)]
// The raw input rides along; L = 0 is the identity.
Mat positional_encoding(const Mat& v, int frequencies);
Var positional_encoding(Graph& g, Var v, int frequencies);
int encoding_dim(int input_dim, int frequencies);

enum class Activation { None, Relu, Softplus };

struct MlpConfig {
  int input_dim = 0;
  int output_dim = 0;
  int hidden_width = 256;
  int layers = 9;  // number of linear layers
  Activation hidden_activation = Activation::Softplus;
  std::vector<int> skip_layers;  // layers whose input is [h, x]
};

// Plain fully-connected stack. Parameters live in a ParamStore so the same
// net can be evaluated on any Graph (or without one).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, const MlpConfig& config);

  Var forward(Graph& g, Var x) const;
  Mat forward_plain(const Mat& x) const;

  const MlpConfig& config() const { return cfg_; }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  Parameter& weight(int layer) { return *weights_[layer]; }
  Parameter& bias(int layer) { return *biases_[layer]; }
  const Parameter& weight(int layer) const { return *weights_[layer]; }
  const Parameter& bias(int layer) const { return *biases_[layer]; }

  // Glorot-uniform weights, zero biases.
  void init_default(Rng& rng);
  // Final layer drawn from U(-scale, scale) so the net starts near zero.
  void init_final_layer_uniform(Rng& rng, double scale);
  void zero_final_layer();

 private:
  MlpConfig cfg_;
  std::vector<Parameter*> weights_;
  std::vector<Parameter*> biases_;

  bool is_skip(int layer) const;
};

enum class Profile { Paper, Desk };

// Architecture table for the four networks. Paper profile: geometry 9 x 256
// softplus with a skip at layer 5, color 5 x 256, deformation nets 9 x 256
// relu. Desk profile shrinks everything to 4 x 64 for fast runs.
struct NetworkShapes {
  MlpConfig geometry;
  MlpConfig color;
  MlpConfig weight_residual;  // K outputs
  MlpConfig displacement;     // 3 outputs
  int feature_dim;            // geometry feature width
};
NetworkShapes network_shapes(Profile profile, int parts, int latent_dim, int geometry_skip = 5);

inline constexpr int kLatentDim = 128;
inline constexpr int kXyzFrequencies = 6;        // canonical model input
inline constexpr int kDirFrequencies = 4;        // viewing direction
inline constexpr int kDeformXyzFrequencies = 10; // residual/displacement input

}  // namespace anif
