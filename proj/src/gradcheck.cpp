#include "camweight/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "camweight/errors.hpp"
#include "camweight/rng.hpp"

namespace camweight::nn {

GradcheckReport gradcheck(const ScalarMap& f, std::span<const double> params, std::span<const double> analytic,
                          const GradcheckOptions& opts) {
  if (params.size() != analytic.size()) throw DimensionMismatch("gradcheck: gradient length differs from params");
  const std::size_t n = params.size();

  // Probe order: a seeded shuffle, truncated to the probe budget.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  }
  const std::size_t count = opts.probes <= 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(opts.probes));

  std::vector<double> x(params.begin(), params.end());
  const std::uint64_t base_signature = f(x).signature;

  GradcheckReport report;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = order[k];
    const double original = x[i];
    x[i] = original + opts.h;
    const Evaluation plus = f(x);
    x[i] = original - opts.h;
    const Evaluation minus = f(x);
    x[i] = original;
    if (plus.signature != base_signature || minus.signature != base_signature) {
      ++report.skipped;
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2.0 * opts.h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opts.floor});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++report.probed;
  }
  return report;
}

}  // namespace camweight::nn
