#include "camweight/gradcheck_suite.hpp"

#include <cstdio>

#include "camweight/attention.hpp"
#include "camweight/embedding.hpp"
#include "camweight/experiment.hpp"
#include "camweight/gradcheck.hpp"
#include "camweight/nn.hpp"
#include "camweight/rng.hpp"

namespace camweight {

namespace {

constexpr double kMlpTol = 1e-6;
constexpr double kEmbeddingTol = 1e-6;
constexpr double kPipelineTol = 1e-4;

nn::Vector random_vector(Rng& rng, Eigen::Index n) {
  nn::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

// Random biases keep hidden units away from the all-zero configuration.
void randomize_biases(nn::MlpParams& p, Rng& rng) {
  for (auto& l : p.layers) l.bias = random_vector(rng, l.bias.size()) * 0.1;
}

GradcheckLine finish(std::string name, const nn::GradcheckReport& r, double tol) {
  return {std::move(name), r.max_rel_error, tol, r.probed, r.skipped, r.probed > 0 && r.max_rel_error < tol};
}

void corrupt(std::vector<double>& g, bool enabled) {
  if (!enabled) return;
  for (double& v : g) v *= 1.01;
}

GradcheckLine check_mlp(const GradcheckSuiteOptions& opts) {
  Rng rng(derive_seed(opts.seed, 1));
  const std::vector<int> dims{6, 16, 16, 4};
  nn::MlpParams params = nn::init_mlp(dims, derive_seed(opts.seed, 2));
  randomize_biases(params, rng);
  const nn::Vector x = random_vector(rng, dims.front());
  const nn::Vector proj = random_vector(rng, dims.back());

  const nn::MlpForward fwd = nn::mlp_forward(params, x);
  std::vector<double> analytic = nn::flatten(nn::mlp_backward(params, fwd.tape, proj).param_grads);
  corrupt(analytic, opts.corrupt_gradients);

  nn::MlpParams scratch = params;
  const nn::ScalarMap f = [&](std::span<const double> theta) {
    nn::unflatten(theta, scratch);
    const nn::MlpForward r = nn::mlp_forward(scratch, x);
    return nn::Evaluation{proj.dot(r.output), nn::activation_signature(r.tape)};
  };
  const std::vector<double> theta = nn::flatten(params);
  const auto report = nn::gradcheck(f, theta, analytic, {0, 1e-5, derive_seed(opts.seed, 3)});
  return finish("mlp_3layer", report, kMlpTol);
}

GradcheckLine check_embedding(const GradcheckSuiteOptions& opts) {
  Rng rng(derive_seed(opts.seed, 4));
  PoseEmbedder emb = PoseEmbedder::initialize(EmbeddingConfig{}, derive_seed(opts.seed, 5));
  randomize_biases(emb.mlp(), rng);
  const Pose pose = sample_camera(derive_seed(opts.seed, 6)).pose;
  const nn::Vector proj = random_vector(rng, emb.config().attention_dim);

  const nn::MlpForward fwd = nn::mlp_forward(emb.mlp(), emb.features(pose));
  std::vector<double> analytic = nn::flatten(nn::mlp_backward(emb.mlp(), fwd.tape, proj).param_grads);
  corrupt(analytic, opts.corrupt_gradients);

  PoseEmbedder scratch = emb;
  const nn::ScalarMap f = [&](std::span<const double> theta) {
    nn::unflatten(theta, scratch.mlp());
    const nn::MlpForward r = nn::mlp_forward(scratch.mlp(), scratch.features(pose));
    return nn::Evaluation{proj.dot(r.output), nn::activation_signature(r.tape)};
  };
  const std::vector<double> theta = nn::flatten(emb.mlp());
  const auto report = nn::gradcheck(f, theta, analytic, {opts.probes, 1e-5, derive_seed(opts.seed, 7)});
  return finish("pose_embedding", report, kEmbeddingTol);
}

GradcheckLine check_pipeline(const GradcheckSuiteOptions& opts) {
  BenchConfig bench;
  bench.volume = {24, 24, 16};
  const std::uint64_t seed = derive_seed(opts.seed, 8);
  const BenchRig rig = make_random_rig(seed, 3, 1, bench);
  std::vector<FeatureVolume> volumes;
  for (const Frustum& f : rig.sources) volumes.push_back(encode_source_view(rig.scene, f, bench.volume));
  const RenderSettings settings{8, 8, 64, derive_seed(seed, 1)};
  const RaySampleCache cache = gather_ray_samples(volumes, rig.targets.front(), settings);
  const Image truth = render_ground_truth(rig.scene, rig.targets.front(), settings);
  const CameraRig cams = camera_rig(rig.targets.front(), rig.sources);

  Rng rng(derive_seed(opts.seed, 9));
  CawModule module = CawModule::initialize(EmbeddingConfig{}, derive_seed(opts.seed, 10));
  randomize_biases(module.embedder().mlp(), rng);

  const CawLoss base = caw_loss_and_grads(module, cams, cache, truth);
  std::vector<double> analytic = nn::flatten(base.grads);
  corrupt(analytic, opts.corrupt_gradients);

  CawModule scratch = module;
  const nn::ScalarMap f = [&](std::span<const double> theta) {
    nn::unflatten(theta, scratch.embedder().mlp());
    const CawTrace trace = caw_forward(scratch, cams);
    const WeightVector w = WeightVector::from_values(
        std::vector<double>(trace.weights.data(), trace.weights.data() + trace.weights.size()));
    return nn::Evaluation{mean_squared_error(composite_image(cache, w), truth), caw_signature(trace)};
  };
  const std::vector<double> theta = nn::flatten(module.embedder().mlp());
  const auto report = nn::gradcheck(f, theta, analytic, {opts.probes, 1e-5, derive_seed(opts.seed, 11)});
  return finish("caw_render_mse_8x8", report, kPipelineTol);
}

}  // namespace

std::vector<GradcheckLine> run_gradcheck_suite(const GradcheckSuiteOptions& opts) {
  return {check_mlp(opts), check_embedding(opts), check_pipeline(opts)};
}

std::string format_gradcheck_line(const GradcheckLine& line) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-20s max_rel_error=%.3e tol=%.0e probed=%d skipped=%d %s", line.name.c_str(),
                line.max_rel_error, line.tolerance, line.probed, line.skipped, line.passed ? "PASS" : "FAIL");
  return buf;
}

}  // namespace camweight
