#include "camweight/attention.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "camweight/errors.hpp"
#include "camweight/rng.hpp"

namespace camweight {

CawModule::CawModule(PoseEmbedder embedder, std::uint64_t seed) : embedder_(std::move(embedder)), seed_(seed) {}

CawModule CawModule::initialize(const EmbeddingConfig& cfg, std::uint64_t seed) {
  return CawModule(PoseEmbedder::initialize(cfg, seed), seed);
}

CawTrace caw_forward(const CawModule& module, const CameraRig& rig) {
  validate_rig(rig);
  const PoseEmbedder& emb = module.embedder();
  CawTrace trace;
  trace.target = nn::mlp_forward(emb.mlp(), emb.features(rig.target));
  trace.sources.reserve(rig.size());
  const auto s = static_cast<Eigen::Index>(rig.size());
  trace.logits.resize(s);
  const double scale = 1.0 / std::sqrt(static_cast<double>(module.attention_dim()));
  for (Eigen::Index i = 0; i < s; ++i) {
    trace.sources.push_back(nn::mlp_forward(emb.mlp(), emb.features(rig.sources[static_cast<std::size_t>(i)])));
    trace.logits[i] = trace.target.output.dot(trace.sources.back().output) * scale;
  }
  trace.weights = nn::softmax_stable(trace.logits);
  return trace;
}

WeightVector caw_weights(const CawModule& module, const CameraRig& rig) {
  const CawTrace trace = caw_forward(module, rig);
  return WeightVector::from_values(std::vector<double>(trace.weights.data(), trace.weights.data() + trace.weights.size()));
}

nn::MlpParams caw_backward(const CawModule& module, const CawTrace& trace, const nn::Vector& grad_weights) {
  if (grad_weights.size() != trace.weights.size()) throw DimensionMismatch("caw_backward: gradient length");
  const nn::MlpParams& mlp = module.embedder().mlp();
  const double scale = 1.0 / std::sqrt(static_cast<double>(module.attention_dim()));
  const nn::Vector grad_logits = nn::softmax_backward(trace.weights, grad_weights);

  nn::MlpParams grads = mlp.zeros_like();
  nn::Vector grad_target = nn::Vector::Zero(trace.target.output.size());
  for (std::size_t i = 0; i < trace.sources.size(); ++i) {
    const double gl = grad_logits[static_cast<Eigen::Index>(i)] * scale;
    grad_target += gl * trace.sources[i].output;
    nn::mlp_backward_accumulate(mlp, trace.sources[i].tape, gl * trace.target.output, grads);
  }
  nn::mlp_backward_accumulate(mlp, trace.target.tape, grad_target, grads);
  return grads;
}

std::uint64_t caw_signature(const CawTrace& trace) {
  std::uint64_t h = nn::activation_signature(trace.target.tape);
  for (const auto& s : trace.sources) h = nn::activation_signature(s.tape, h);
  return h;
}

CawLoss caw_loss_and_grads(const CawModule& module, const CameraRig& rig, const RaySampleCache& render,
                           const Image& target_image) {
  if (static_cast<int>(rig.size()) != render.sources) {
    throw DimensionMismatch("caw_loss_and_grads: rig and render cache disagree on the source count");
  }
  const CawTrace trace = caw_forward(module, rig);
  const WeightVector w = WeightVector::from_values(
      std::vector<double>(trace.weights.data(), trace.weights.data() + trace.weights.size()));
  const WeightSensitivity sens = mse_weight_gradient(render, w, target_image);
  CawLoss out;
  out.loss = sens.loss;
  out.grads = caw_backward(module, trace, sens.grad);
  out.weights = trace.weights;
  return out;
}

namespace {

bool all_finite(const nn::MlpParams& p) {
  for (const auto& l : p.layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

}  // namespace

TrainResult train_caw(CawModule module, std::span<const TrainingExample> examples, const TrainOptions& opts) {
  if (examples.empty()) throw InvalidConfig("train_caw needs at least one training example");
  if (opts.epochs < 0) throw InvalidConfig("epoch count must be nonnegative");
  nn::AdamState adam = nn::AdamState::for_params(module.embedder().mlp(), opts.adam);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(opts.seed);

  TrainResult result{module, {}};
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
    double total = 0.0;
    for (std::size_t idx : order) {
      const TrainingExample& ex = examples[idx];
      const CawLoss step = caw_loss_and_grads(result.module, ex.rig, ex.render, ex.target_image);
      if (!std::isfinite(step.loss) || !all_finite(step.grads)) {
        throw DivergedTraining("CAW training diverged in epoch " + std::to_string(epoch));
      }
      total += step.loss;
      nn::adam_step(result.module.embedder().mlp(), step.grads, adam);
    }
    result.epoch_mean_loss.push_back(total / static_cast<double>(examples.size()));
  }
  return result;
}

std::string caw_to_json(const CawModule& module) {
  nlohmann::json doc = embedder_to_json(module.embedder(), module.seed());
  doc["attention_dim"] = module.attention_dim();
  return doc.dump();
}

CawModule caw_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedInput(std::string("CAW parameters are not valid JSON: ") + e.what());
  }
  std::uint64_t seed = 0;
  PoseEmbedder emb = embedder_from_json(doc, &seed);
  return CawModule(std::move(emb), seed);
}

void save_caw(const CawModule& module, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << caw_to_json(module) << '\n';
}

CawModule load_caw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return caw_from_json(buffer.str());
}

}  // namespace camweight
