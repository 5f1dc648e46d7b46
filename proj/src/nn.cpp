#include "camweight/nn.hpp"

#include <cmath>

#include "camweight/errors.hpp"
#include "camweight/rng.hpp"

namespace camweight::nn {

int MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

std::vector<int> MlpParams::dims() const {
  std::vector<int> d;
  if (layers.empty()) return d;
  d.push_back(input_dim());
  for (const Layer& l : layers) d.push_back(static_cast<int>(l.weight.rows()));
  return d;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.layers.reserve(layers.size());
  for (const Layer& l : layers) {
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return z;
}

void MlpParams::check() const {
  if (layers.empty()) throw DimensionMismatch("MLP has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].bias.size() != layers[i].weight.rows()) {
      throw DimensionMismatch("layer " + std::to_string(i) + ": bias length does not match weight rows");
    }
    if (i + 1 < layers.size() && layers[i].weight.rows() != layers[i + 1].weight.cols()) {
      throw DimensionMismatch("layer " + std::to_string(i) + " output does not chain into the next layer");
    }
  }
}

MlpParams init_mlp(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw DimensionMismatch("init_mlp needs at least an input and an output dimension");
  Rng rng(seed);
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int in = dims[i];
    const int out = dims[i + 1];
    if (in <= 0 || out <= 0) throw DimensionMismatch("layer dimensions must be positive");
    const double limit = std::sqrt(6.0 / (in + out));
    Layer l{Matrix(out, in), Vector::Zero(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) l.weight(r, c) = rng.uniform(-limit, limit);
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

std::vector<double> flatten(const MlpParams& p) {
  std::vector<double> flat;
  flat.reserve(p.parameter_count());
  for (const Layer& l : p.layers) {
    flat.insert(flat.end(), l.weight.data(), l.weight.data() + l.weight.size());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return flat;
}

void unflatten(std::span<const double> flat, MlpParams& p) {
  if (flat.size() != p.parameter_count()) throw DimensionMismatch("flat parameter vector has the wrong length");
  std::size_t k = 0;
  for (Layer& l : p.layers) {
    std::copy_n(flat.begin() + k, l.weight.size(), l.weight.data());
    k += l.weight.size();
    std::copy_n(flat.begin() + k, l.bias.size(), l.bias.data());
    k += l.bias.size();
  }
}

MlpForward mlp_forward(const MlpParams& p, const Vector& x) {
  if (p.layers.empty() || x.size() != p.input_dim()) {
    throw DimensionMismatch("mlp_forward: input length " + std::to_string(x.size()) + " but network expects " +
                            std::to_string(p.input_dim()));
  }
  MlpForward out;
  out.tape.inputs.reserve(p.layers.size());
  out.tape.preacts.reserve(p.layers.size());
  Vector h = x;
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const Layer& l = p.layers[i];
    Vector z = l.weight * h + l.bias;
    out.tape.inputs.push_back(std::move(h));
    const bool last = i + 1 == p.layers.size();
    h = last ? z : Vector(z.cwiseMax(0.0));
    out.tape.preacts.push_back(std::move(z));
  }
  out.output = std::move(h);
  return out;
}

Vector mlp_backward_accumulate(const MlpParams& p, const MlpTape& tape, const Vector& output_grad,
                               MlpParams& acc) {
  const std::size_t n = p.layers.size();
  if (tape.inputs.size() != n || tape.preacts.size() != n || acc.layers.size() != n) {
    throw DimensionMismatch("mlp_backward: tape does not match the network");
  }
  if (output_grad.size() != p.output_dim()) throw DimensionMismatch("mlp_backward: output gradient length");
  Vector g = output_grad;
  for (std::size_t i = n; i-- > 0;) {
    const Layer& l = p.layers[i];
    if (i + 1 < n) {
      // ReLU; the subgradient at exactly zero is zero.
      const Vector& z = tape.preacts[i];
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        if (!(z[k] > 0.0)) g[k] = 0.0;
      }
    }
    acc.layers[i].weight.noalias() += g * tape.inputs[i].transpose();
    acc.layers[i].bias += g;
    g = l.weight.transpose() * g;
  }
  return g;
}

MlpBackward mlp_backward(const MlpParams& p, const MlpTape& tape, const Vector& output_grad) {
  MlpBackward out;
  out.param_grads = p.zeros_like();
  out.input_grad = mlp_backward_accumulate(p, tape, output_grad, out.param_grads);
  return out;
}

std::uint64_t activation_signature(const MlpTape& tape, std::uint64_t seed) {
  std::uint64_t h = mix_seed(seed);
  for (std::size_t i = 0; i + 1 < tape.preacts.size(); ++i) {
    const Vector& z = tape.preacts[i];
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      h = mix_seed(h ^ (z[k] > 0.0 ? 0x5bd1e995ULL : 0x1b873593ULL) ^ static_cast<std::uint64_t>(k));
    }
  }
  return h;
}

Vector softmax_stable(const Vector& logits) {
  if (logits.size() == 0) return logits;
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

Vector softmax_backward(const Vector& probs, const Vector& grad_probs) {
  const double dot = probs.dot(grad_probs);
  return probs.cwiseProduct((grad_probs.array() - dot).matrix());
}

AdamState AdamState::for_params(const MlpParams& p, AdamConfig config) {
  return AdamState{p.zeros_like(), p.zeros_like(), 0, config};
}

namespace {

template <typename Dense>
void adam_update(Dense& param, const Dense& grad, Dense& m, Dense& v, const AdamConfig& c, double bc1,
                 double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  param.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

bool same_shape(const MlpParams& a, const MlpParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.rows() != b.layers[i].weight.rows() ||
        a.layers[i].weight.cols() != b.layers[i].weight.cols() ||
        a.layers[i].bias.size() != b.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

void adam_step(MlpParams& p, const MlpParams& grads, AdamState& state) {
  if (!same_shape(p, grads) || !same_shape(p, state.first_moment) || !same_shape(p, state.second_moment)) {
    throw DimensionMismatch("adam_step: parameter, gradient and state shapes differ");
  }
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    adam_update(p.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
                state.second_moment.layers[i].weight, c, bc1, bc2);
    adam_update(p.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
                state.second_moment.layers[i].bias, c, bc1, bc2);
  }
}

nlohmann::json mlp_to_json(const MlpParams& p, std::uint64_t seed) {
  using nlohmann::json;
  json layers = json::array();
  for (const Layer& l : p.layers) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) row.push_back(l.weight(r, c));
      w.push_back(std::move(row));
    }
    json b = json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias[r]);
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}});
  }
  return {{"layers", std::move(layers)}, {"meta", {{"dims", p.dims()}, {"seed", seed}}}};
}

MlpParams mlp_from_json(const nlohmann::json& doc, std::uint64_t* seed) {
  try {
    MlpParams p;
    for (const auto& jl : doc.at("layers")) {
      const auto& jw = jl.at("w");
      const auto& jb = jl.at("b");
      const auto rows = static_cast<Eigen::Index>(jw.size());
      const auto cols = rows > 0 ? static_cast<Eigen::Index>(jw[0].size()) : 0;
      Layer l{Matrix(rows, cols), Vector(static_cast<Eigen::Index>(jb.size()))};
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(jw[r].size()) != cols) throw MalformedInput("ragged weight matrix");
        for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = jw[r][c].get<double>();
      }
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = jb[r].get<double>();
      p.layers.push_back(std::move(l));
    }
    p.check();
    if (seed) *seed = doc.contains("meta") ? doc["meta"].value("seed", std::uint64_t{0}) : 0;
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(std::string("malformed MLP parameters: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw MalformedInput(std::string("malformed MLP parameters: ") + e.what());
  }
}

}  // namespace camweight::nn
