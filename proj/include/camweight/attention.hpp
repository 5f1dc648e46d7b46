#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "camweight/embedding.hpp"
#include "camweight/image.hpp"
#include "camweight/nn.hpp"
#include "camweight/renderer.hpp"
#include "camweight/weighting.hpp"

namespace camweight {

/// Cross-attention weighting: w = softmax(E_t E_s^T / sqrt(A)), where E_t and the
/// rows of E_s come from one shared pose embedding network.
class CawModule {
 public:
  explicit CawModule(PoseEmbedder embedder, std::uint64_t seed = 0);

  static CawModule initialize(const EmbeddingConfig& cfg, std::uint64_t seed);

  const PoseEmbedder& embedder() const { return embedder_; }
  PoseEmbedder& embedder() { return embedder_; }
  int attention_dim() const { return embedder_.config().attention_dim; }
  std::uint64_t seed() const { return seed_; }

 private:
  PoseEmbedder embedder_;
  std::uint64_t seed_;
};

WeightVector caw_weights(const CawModule& module, const CameraRig& rig);

/// Forward pass with everything the backward pass needs.
struct CawTrace {
  nn::MlpForward target;
  std::vector<nn::MlpForward> sources;
  nn::Vector logits;
  nn::Vector weights;
};

CawTrace caw_forward(const CawModule& module, const CameraRig& rig);

/// Parameter gradient of a scalar loss given d loss / d weights.
nn::MlpParams caw_backward(const CawModule& module, const CawTrace& trace, const nn::Vector& grad_weights);

/// ReLU pattern of every embedding evaluated in the trace.
std::uint64_t caw_signature(const CawTrace& trace);

struct CawLoss {
  double loss = 0.0;
  nn::MlpParams grads;
  nn::Vector weights;
};

/// Pixel MSE between the frozen renderer's output under CAW weights and the
/// reference target image, with gradients for the CAW parameters only.
CawLoss caw_loss_and_grads(const CawModule& module, const CameraRig& rig, const RaySampleCache& render,
                           const Image& target_image);

struct TrainingExample {
  CameraRig rig;
  RaySampleCache render;
  Image target_image;
};

struct TrainOptions {
  int epochs = 1;
  std::uint64_t seed = 0;  // per-epoch shuffling
  nn::AdamConfig adam;
};

struct TrainResult {
  CawModule module;
  std::vector<double> epoch_mean_loss;
};

/// One Adam step per example, examples reshuffled each epoch. Throws
/// DivergedTraining when a loss or gradient turns non-finite.
TrainResult train_caw(CawModule module, std::span<const TrainingExample> examples, const TrainOptions& opts);

// Embedding JSON plus "attention_dim" and "variant".
std::string caw_to_json(const CawModule& module);
CawModule caw_from_json(const std::string& text);
void save_caw(const CawModule& module, const std::string& path);
CawModule load_caw(const std::string& path);

}  // namespace camweight
