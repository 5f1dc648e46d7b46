#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace camweight {

struct GradcheckLine {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int probed = 0;
  int skipped = 0;
  bool passed = false;
};

struct GradcheckSuiteOptions {
  std::uint64_t seed = 7;
  int probes = 200;
  // Negative control: scales every analytic gradient by 1.01 before comparing.
  bool corrupt_gradients = false;
};

/// Finite-difference checks of (a) a random 3-layer MLP, (b) the pose embedding and
/// (c) the CAW-weighted render MSE on an 8x8 image, each against its tolerance.
std::vector<GradcheckLine> run_gradcheck_suite(const GradcheckSuiteOptions& opts = {});

std::string format_gradcheck_line(const GradcheckLine& line);

}  // namespace camweight
