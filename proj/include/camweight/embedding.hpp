#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "camweight/nn.hpp"
#include "camweight/pose.hpp"

namespace camweight {

/// Fourier-feature encoding of a 3-vector. Output layout follows the common
/// NeRF encoder: [x (if include_input), sin(f0 x), cos(f0 x), sin(f1 x), ...]
/// with f_j = freq_factor * 2^j, each block holding the three coordinates.
struct EncodingConfig {
  int num_freqs = 6;
  double freq_factor = 1.5;
  bool include_input = true;

  int output_dim() const { return (include_input ? 3 : 0) + 6 * num_freqs; }
  void validate() const;
};

nn::Vector positional_encode(const Vec3& x, const EncodingConfig& cfg);

enum class EmbeddingVariant {
  GeometricMLP,     // encode(center) ++ view direction -> 3 linear layers
  FlattenedLinear,  // row-major 4x4 -> 2 linear layers
};

std::string variant_name(EmbeddingVariant v);
EmbeddingVariant parse_variant(const std::string& name);

struct EmbeddingConfig {
  EmbeddingVariant variant = EmbeddingVariant::GeometricMLP;
  int hidden_dim = 64;
  int attention_dim = 128;
  EncodingConfig encoding;  // GeometricMLP only

  int input_dim() const;
  /// 42 -> 64 -> 64 -> 128 or 16 -> 64 -> 128 with the defaults.
  std::vector<int> layer_dims() const;
};

/// Shared pose embedding network: the same parameters embed target and source poses.
class PoseEmbedder {
 public:
  /// Throws DimensionMismatch when the MLP does not match the configuration.
  PoseEmbedder(EmbeddingConfig cfg, nn::MlpParams mlp);

  static PoseEmbedder initialize(const EmbeddingConfig& cfg, std::uint64_t seed);

  const EmbeddingConfig& config() const { return cfg_; }
  const nn::MlpParams& mlp() const { return mlp_; }
  nn::MlpParams& mlp() { return mlp_; }

  /// The network input for a pose.
  nn::Vector features(const Pose& p) const;

 private:
  EmbeddingConfig cfg_;
  nn::MlpParams mlp_;
};

nn::Vector embed_pose(const Pose& p, const PoseEmbedder& embedder);

/// Row i holds embed_pose(poses[i]).
nn::Matrix embed_pose_batch(std::span<const Pose> poses, const PoseEmbedder& embedder);

nlohmann::json embedder_to_json(const PoseEmbedder& embedder, std::uint64_t seed);
PoseEmbedder embedder_from_json(const nlohmann::json& doc, std::uint64_t* seed = nullptr);

}  // namespace camweight
