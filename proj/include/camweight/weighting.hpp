#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camweight/pose.hpp"

namespace camweight {

class CawModule;

/// Per-source blending weights: nonnegative, summing to one within 1e-9.
class WeightVector {
 public:
  /// Validates the simplex invariants; throws DegenerateWeights otherwise.
  static WeightVector from_values(std::vector<double> values);

  const std::vector<double>& values() const& { return values_; }
  std::vector<double> values() && { return std::move(values_); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t argmax() const;
  Eigen::VectorXd as_eigen() const;

 private:
  explicit WeightVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;

  friend WeightVector normalize(std::span<const double> intermediate);
  friend WeightVector uniform_weights(std::size_t count);
};

inline constexpr double kDefaultEpsilon = 1e-6;

/// Divides by the sum. Throws DegenerateWeights when every entry is zero, or
/// when an entry is negative or non-finite.
WeightVector normalize(std::span<const double> intermediate);

WeightVector uniform_weights(std::size_t count);

/// w'_i = 1 / (epsilon + ||P_si - P_t||) with the L1 or Frobenius matrix norm.
WeightVector norm_weighting(const CameraRig& rig, NormKind kind, double epsilon = kDefaultEpsilon);

/// w'_i = exp(-beta * ||c_t - c_si||^2). Evaluated relative to the nearest
/// source so that large beta cannot underflow every entry to zero.
WeightVector gaussian_weighting(const CameraRig& rig, double beta);

/// w'_i = 1 / (epsilon + alpha * theta_i / pi + (1 - alpha) * d_i / max_k d_k).
/// Throws DegenerateRig when alpha < 1 and every source center equals the target center.
WeightVector error_weighting(const CameraRig& rig, double alpha, double epsilon = kDefaultEpsilon);

enum class Scheme { Mean, L1, Frobenius, DistGauss, Error, CrossAttention };

struct SchemeConfig {
  Scheme scheme = Scheme::Mean;
  std::optional<double> beta;   // DistGauss only
  std::optional<double> alpha;  // Error only
  double epsilon = kDefaultEpsilon;

  static SchemeConfig mean() { return {}; }
  static SchemeConfig l1(double eps = kDefaultEpsilon) { return {Scheme::L1, {}, {}, eps}; }
  static SchemeConfig frobenius(double eps = kDefaultEpsilon) { return {Scheme::Frobenius, {}, {}, eps}; }
  static SchemeConfig gauss(double beta) { return {Scheme::DistGauss, beta, {}, kDefaultEpsilon}; }
  static SchemeConfig error(double alpha, double eps = kDefaultEpsilon) { return {Scheme::Error, {}, alpha, eps}; }
  static SchemeConfig cross_attention() { return {Scheme::CrossAttention, {}, {}, kDefaultEpsilon}; }

  /// Throws InvalidConfig when a parameter is missing, out of range or not used by the scheme.
  void validate() const;

  /// Short CLI name: mean, l1, fro, gauss, err, caw.
  std::string name() const;
  /// "beta=0.3", "alpha=1", or empty for parameterless schemes.
  std::string param_label() const;
};

/// Inverse of SchemeConfig::name(); throws InvalidConfig on unknown names.
Scheme parse_scheme(std::string_view name);

enum class DegeneratePolicy {
  FallbackUniform,  // return uniform weights and report a warning
  Throw,
};

struct WeighOptions {
  DegeneratePolicy on_degenerate = DegeneratePolicy::FallbackUniform;
  std::function<void(const std::string&)> warn;  // defaults to stderr
};

/// The weighting function w = C(P_t, {P_si}). `caw` must be non-null exactly
/// when the scheme is CrossAttention.
WeightVector compute_weights(const CameraRig& rig, const SchemeConfig& cfg, const CawModule* caw = nullptr,
                             const WeighOptions& opts = {});

/// Latent vectors of one ray point, one column per source (L x S).
using LatentMatrix = Eigen::MatrixXd;

/// sum_i l_i * w_i. Throws DimensionMismatch when the column count differs from the weight count.
Eigen::VectorXd weighted_aggregate(const LatentMatrix& latents, const WeightVector& w);

}  // namespace camweight
