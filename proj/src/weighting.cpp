#include "camweight/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "camweight/attention.hpp"
#include "camweight/errors.hpp"

namespace camweight {

namespace {
constexpr double kSimplexTol = 1e-9;

std::string format_param(const char* key, double v) {
  std::ostringstream os;
  os << key << '=' << v;
  return os.str();
}
}  // namespace

WeightVector WeightVector::from_values(std::vector<double> values) {
  if (values.empty()) throw DegenerateWeights("weight vector is empty");
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw DegenerateWeights("weights must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) throw DegenerateWeights("weights do not sum to one");
  return WeightVector(std::move(values));
}

std::size_t WeightVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

Eigen::VectorXd WeightVector::as_eigen() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

WeightVector normalize(std::span<const double> intermediate) {
  if (intermediate.empty()) throw DegenerateWeights("no intermediate weights to normalize");
  double sum = 0.0;
  for (double v : intermediate) {
    if (!std::isfinite(v) || v < 0.0) throw DegenerateWeights("intermediate weights must be finite and nonnegative");
    sum += v;
  }
  if (!(sum > 0.0)) throw DegenerateWeights("all intermediate weights are zero");
  std::vector<double> w(intermediate.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = intermediate[i] / sum;
  return WeightVector(std::move(w));
}

WeightVector uniform_weights(std::size_t count) {
  if (count == 0) throw DegenerateWeights("uniform_weights needs at least one source");
  return WeightVector(std::vector<double>(count, 1.0 / static_cast<double>(count)));
}

WeightVector norm_weighting(const CameraRig& rig, NormKind kind, double epsilon) {
  validate_rig(rig);
  std::vector<double> w(rig.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 1.0 / (epsilon + pose_norm_distance(rig.sources[i], rig.target, kind));
  }
  return normalize(w);
}

WeightVector gaussian_weighting(const CameraRig& rig, double beta) {
  validate_rig(rig);
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidConfig("gaussian weighting needs beta > 0");
  std::vector<double> sq(rig.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = center_distance(rig.target, rig.sources[i]);
    sq[i] = d * d;
  }
  // exp(-beta d_i^2) / sum_k exp(-beta d_k^2) is unchanged by the common factor exp(beta d_min^2).
  const double nearest = *std::min_element(sq.begin(), sq.end());
  std::vector<double> w(sq.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(-beta * (sq[i] - nearest));
  return normalize(w);
}

WeightVector error_weighting(const CameraRig& rig, double alpha, double epsilon) {
  validate_rig(rig);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidConfig("error weighting needs alpha in [0, 1]");
  if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be positive");
  const std::size_t s = rig.size();
  std::vector<double> dist(s);
  for (std::size_t i = 0; i < s; ++i) dist[i] = center_distance(rig.target, rig.sources[i]);
  const double max_dist = *std::max_element(dist.begin(), dist.end());
  const bool use_distance = alpha < 1.0;
  if (use_distance && !(max_dist > 0.0)) {
    throw DegenerateRig("error weighting: every source center coincides with the target center");
  }
  std::vector<double> w(s);
  for (std::size_t i = 0; i < s; ++i) {
    double err = alpha * angle_between(rig.target, rig.sources[i]) / std::numbers::pi;
    if (use_distance) err += (1.0 - alpha) * dist[i] / max_dist;
    w[i] = 1.0 / (epsilon + err);
  }
  return normalize(w);
}

void SchemeConfig::validate() const {
  const bool wants_beta = scheme == Scheme::DistGauss;
  const bool wants_alpha = scheme == Scheme::Error;
  if (wants_beta != beta.has_value()) {
    throw InvalidConfig(wants_beta ? "gauss weighting needs beta" : "beta is only used by gauss weighting");
  }
  if (wants_alpha != alpha.has_value()) {
    throw InvalidConfig(wants_alpha ? "error weighting needs alpha" : "alpha is only used by error weighting");
  }
  if (beta && !(*beta > 0.0 && std::isfinite(*beta))) throw InvalidConfig("beta must be a positive finite number");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw InvalidConfig("alpha must lie in [0, 1]");
  if (!(epsilon > 0.0 && std::isfinite(epsilon))) throw InvalidConfig("epsilon must be a positive finite number");
}

std::string SchemeConfig::name() const {
  switch (scheme) {
    case Scheme::Mean: return "mean";
    case Scheme::L1: return "l1";
    case Scheme::Frobenius: return "fro";
    case Scheme::DistGauss: return "gauss";
    case Scheme::Error: return "err";
    case Scheme::CrossAttention: return "caw";
  }
  return "unknown";
}

std::string SchemeConfig::param_label() const {
  if (beta) return format_param("beta", *beta);
  if (alpha) return format_param("alpha", *alpha);
  return {};
}

Scheme parse_scheme(std::string_view name) {
  if (name == "mean") return Scheme::Mean;
  if (name == "l1") return Scheme::L1;
  if (name == "fro") return Scheme::Frobenius;
  if (name == "gauss") return Scheme::DistGauss;
  if (name == "err") return Scheme::Error;
  if (name == "caw") return Scheme::CrossAttention;
  throw InvalidConfig("unknown weighting scheme '" + std::string(name) + "'");
}

WeightVector compute_weights(const CameraRig& rig, const SchemeConfig& cfg, const CawModule* caw,
                             const WeighOptions& opts) {
  cfg.validate();
  validate_rig(rig);
  if ((cfg.scheme == Scheme::CrossAttention) != (caw != nullptr)) {
    throw InvalidConfig("a CAW module must be supplied exactly when the scheme is caw");
  }
  try {
    switch (cfg.scheme) {
      case Scheme::Mean: return uniform_weights(rig.size());
      case Scheme::L1: return norm_weighting(rig, NormKind::L1, cfg.epsilon);
      case Scheme::Frobenius: return norm_weighting(rig, NormKind::Frobenius, cfg.epsilon);
      case Scheme::DistGauss: return gaussian_weighting(rig, *cfg.beta);
      case Scheme::Error: return error_weighting(rig, *cfg.alpha, cfg.epsilon);
      case Scheme::CrossAttention: return caw_weights(*caw, rig);
    }
  } catch (const Degenerate& e) {
    if (opts.on_degenerate == DegeneratePolicy::Throw) throw;
    const std::string msg = std::string(e.what()) + "; falling back to uniform weights";
    if (opts.warn) {
      opts.warn(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  }
  return uniform_weights(rig.size());
}

Eigen::VectorXd weighted_aggregate(const LatentMatrix& latents, const WeightVector& w) {
  if (latents.cols() != static_cast<Eigen::Index>(w.size())) {
    throw DimensionMismatch("weighted_aggregate: " + std::to_string(latents.cols()) + " latent columns but " +
                            std::to_string(w.size()) + " weights");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(latents.rows());
  for (Eigen::Index i = 0; i < latents.cols(); ++i) out += latents.col(i) * w[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace camweight
