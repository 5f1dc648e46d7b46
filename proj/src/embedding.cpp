#include "camweight/embedding.hpp"

#include <cmath>

#include "camweight/errors.hpp"

namespace camweight {

void EncodingConfig::validate() const {
  if (num_freqs < 1) throw InvalidConfig("positional encoding needs at least one frequency");
  if (!(freq_factor > 0.0)) throw InvalidConfig("positional encoding needs freq_factor > 0");
}

nn::Vector positional_encode(const Vec3& x, const EncodingConfig& cfg) {
  cfg.validate();
  nn::Vector out(cfg.output_dim());
  Eigen::Index k = 0;
  if (cfg.include_input) {
    out.segment<3>(0) = x;
    k = 3;
  }
  double f = cfg.freq_factor;
  for (int j = 0; j < cfg.num_freqs; ++j, f *= 2.0) {
    for (int c = 0; c < 3; ++c) out[k + c] = std::sin(f * x[c]);
    for (int c = 0; c < 3; ++c) out[k + 3 + c] = std::cos(f * x[c]);
    k += 6;
  }
  return out;
}

std::string variant_name(EmbeddingVariant v) {
  return v == EmbeddingVariant::GeometricMLP ? "geometric_mlp" : "flattened_linear";
}

EmbeddingVariant parse_variant(const std::string& name) {
  if (name == "geometric_mlp") return EmbeddingVariant::GeometricMLP;
  if (name == "flattened_linear") return EmbeddingVariant::FlattenedLinear;
  throw MalformedInput("unknown embedding variant '" + name + "'");
}

int EmbeddingConfig::input_dim() const {
  return variant == EmbeddingVariant::GeometricMLP ? encoding.output_dim() + 3 : 16;
}

std::vector<int> EmbeddingConfig::layer_dims() const {
  if (variant == EmbeddingVariant::GeometricMLP) return {input_dim(), hidden_dim, hidden_dim, attention_dim};
  return {input_dim(), hidden_dim, attention_dim};
}

PoseEmbedder::PoseEmbedder(EmbeddingConfig cfg, nn::MlpParams mlp) : cfg_(cfg), mlp_(std::move(mlp)) {
  if (cfg_.variant == EmbeddingVariant::GeometricMLP) cfg_.encoding.validate();
  mlp_.check();
  if (mlp_.dims() != cfg_.layer_dims()) {
    throw DimensionMismatch("embedding MLP layer dimensions do not match the embedding configuration");
  }
}

PoseEmbedder PoseEmbedder::initialize(const EmbeddingConfig& cfg, std::uint64_t seed) {
  const std::vector<int> dims = cfg.layer_dims();
  return PoseEmbedder(cfg, nn::init_mlp(dims, seed));
}

nn::Vector PoseEmbedder::features(const Pose& p) const {
  if (cfg_.variant == EmbeddingVariant::FlattenedLinear) {
    nn::Vector flat(16);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) flat[4 * r + c] = p.matrix()(r, c);
    }
    return flat;
  }
  const nn::Vector enc = positional_encode(camera_center(p), cfg_.encoding);
  nn::Vector in(enc.size() + 3);
  in << enc, view_direction(p);
  return in;
}

nn::Vector embed_pose(const Pose& p, const PoseEmbedder& embedder) {
  return nn::mlp_forward(embedder.mlp(), embedder.features(p)).output;
}

nn::Matrix embed_pose_batch(std::span<const Pose> poses, const PoseEmbedder& embedder) {
  nn::Matrix out(static_cast<Eigen::Index>(poses.size()), embedder.config().attention_dim);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = embed_pose(poses[i], embedder).transpose();
  }
  return out;
}

nlohmann::json embedder_to_json(const PoseEmbedder& embedder, std::uint64_t seed) {
  const EmbeddingConfig& cfg = embedder.config();
  nlohmann::json doc = nn::mlp_to_json(embedder.mlp(), seed);
  doc["variant"] = variant_name(cfg.variant);
  doc["hidden_dim"] = cfg.hidden_dim;
  doc["attention_dim"] = cfg.attention_dim;
  if (cfg.variant == EmbeddingVariant::GeometricMLP) {
    doc["encoding"] = {{"num_freqs", cfg.encoding.num_freqs},
                       {"freq_factor", cfg.encoding.freq_factor},
                       {"include_input", cfg.encoding.include_input}};
  }
  return doc;
}

PoseEmbedder embedder_from_json(const nlohmann::json& doc, std::uint64_t* seed) {
  try {
    EmbeddingConfig cfg;
    cfg.variant = parse_variant(doc.at("variant").get<std::string>());
    cfg.hidden_dim = doc.at("hidden_dim").get<int>();
    cfg.attention_dim = doc.at("attention_dim").get<int>();
    if (cfg.variant == EmbeddingVariant::GeometricMLP) {
      const auto& enc = doc.at("encoding");
      cfg.encoding.num_freqs = enc.at("num_freqs").get<int>();
      cfg.encoding.freq_factor = enc.at("freq_factor").get<double>();
      cfg.encoding.include_input = enc.at("include_input").get<bool>();
    }
    return PoseEmbedder(cfg, nn::mlp_from_json(doc, seed));
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(std::string("malformed embedding parameters: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw MalformedInput(std::string("malformed embedding parameters: ") + e.what());
  } catch (const InvalidConfig& e) {
    throw MalformedInput(std::string("malformed embedding parameters: ") + e.what());
  }
}

}  // namespace camweight
