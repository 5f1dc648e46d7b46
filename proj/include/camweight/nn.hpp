#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace camweight::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Dense layer y = W x + b; W is out x in.
struct Layer {
  Matrix weight;
  Vector bias;
};

// Linear layers with ReLU between consecutive layers and no activation after the last.
struct MlpParams {
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  std::size_t parameter_count() const;

  /// Same shapes, all entries zero.
  MlpParams zeros_like() const;

  /// Throws DimensionMismatch if consecutive layers do not chain.
  void check() const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_mlp(std::span<const int> dims, std::uint64_t seed);

// Flat parameter order: layer by layer, weight row-major then bias.
std::vector<double> flatten(const MlpParams& p);
void unflatten(std::span<const double> flat, MlpParams& p);

// Activations cached by the forward pass.
struct MlpTape {
  std::vector<Vector> inputs;   // input to each layer
  std::vector<Vector> preacts;  // W x + b of each layer
};

struct MlpForward {
  Vector output;
  MlpTape tape;
};

MlpForward mlp_forward(const MlpParams& p, const Vector& x);

struct MlpBackward {
  MlpParams param_grads;
  Vector input_grad;
};

MlpBackward mlp_backward(const MlpParams& p, const MlpTape& tape, const Vector& output_grad);

/// Accumulates parameter gradients into `acc` (same shapes as p) and returns the input gradient.
Vector mlp_backward_accumulate(const MlpParams& p, const MlpTape& tape, const Vector& output_grad,
                               MlpParams& acc);

/// Hash of the ReLU on/off pattern of a tape; changes exactly when a hidden
/// pre-activation crosses zero. Used to exclude kinks from gradient checks.
std::uint64_t activation_signature(const MlpTape& tape, std::uint64_t seed = 0);

Vector softmax_stable(const Vector& logits);

/// Vector-Jacobian product of softmax: given probabilities p and dL/dp, returns dL/dlogits.
Vector softmax_backward(const Vector& probs, const Vector& grad_probs);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;
  AdamConfig config;

  static AdamState for_params(const MlpParams& p, AdamConfig config = {});
};

/// One bias-corrected adaptive-moment update in place. Throws DimensionMismatch on shape mismatch.
void adam_step(MlpParams& p, const MlpParams& grads, AdamState& state);

// {"layers": [{"w": [[...]], "b": [...]}, ...], "meta": {"dims": [...], "seed": N}}
// Owners of an MLP (the embedding and attention modules) add their own top-level keys.
nlohmann::json mlp_to_json(const MlpParams& p, std::uint64_t seed);
/// Throws MalformedInput when the document does not describe a chained MLP.
MlpParams mlp_from_json(const nlohmann::json& doc, std::uint64_t* seed = nullptr);

}  // namespace camweight::nn
