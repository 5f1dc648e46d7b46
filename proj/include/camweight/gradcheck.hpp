#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace camweight::nn {

// Value of a scalar map plus a signature of its piecewise-linear regime
// (for example the ReLU activation pattern). Probes whose perturbed
// evaluations land in a different regime straddle a kink and are skipped.
struct Evaluation {
  double value = 0.0;
  std::uint64_t signature = 0;
};

using ScalarMap = std::function<Evaluation(std::span<const double>)>;

struct GradcheckOptions {
  int probes = 64;      // coordinates probed; all of them when >= the parameter count
  double h = 1e-5;
  std::uint64_t seed = 0;
  double floor = 1e-8;  // denominator floor for the relative error
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  int probed = 0;
  int skipped = 0;
};

/// Compares `analytic` against central differences of `f` at `params`.
/// Relative error per coordinate: |a - n| / max(|a|, |n|, floor).
GradcheckReport gradcheck(const ScalarMap& f, std::span<const double> params, std::span<const double> analytic,
                          const GradcheckOptions& opts = {});

}  // namespace camweight::nn
