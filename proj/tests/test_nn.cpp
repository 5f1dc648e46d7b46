#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "camweight/errors.hpp"
#include "camweight/gradcheck.hpp"
#include "camweight/nn.hpp"
#include "camweight/rng.hpp"

using namespace camweight;
using namespace camweight::nn;

namespace {

MlpParams hand_net() {
  MlpParams p;
  Layer l1{Matrix(2, 2), Vector(2)};
  l1.weight << 0.5, -0.25,
               1.0, 0.75;
  l1.bias << 0.1, -0.2;
  Layer l2{Matrix(1, 2), Vector(1)};
  l2.weight << 2.0, -1.0;
  l2.bias << 0.3;
  p.layers = {l1, l2};
  return p;
}

MlpParams random_net(std::vector<int> dims, std::uint64_t seed) {
  MlpParams p = init_mlp(dims, seed);
  Rng rng(seed + 1);
  for (Layer& l : p.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = rng.uniform(-0.1, 0.1);
  }
  return p;
}

Vector random_vector(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST(MlpForward, ZeroNetGivesZero) {
  const int dims[] = {3, 5, 2};
  const MlpParams p = init_mlp(dims, 1).zeros_like();
  EXPECT_EQ(mlp_forward(p, Vector::Constant(3, 0.7)).output, Vector::Zero(2));
}

TEST(MlpForward, IdentityLayer) {
  MlpParams p;
  p.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3)});
  const Vector x(Eigen::Vector3d(-1, 2, -3));
  EXPECT_EQ(mlp_forward(p, x).output, x);
}

TEST(MlpForward, HandOracle) {
  const MlpForward f = mlp_forward(hand_net(), Eigen::Vector2d(1, -1));
  EXPECT_NEAR(f.tape.preacts[0][0], 0.85, 1e-15);
  EXPECT_NEAR(f.tape.preacts[0][1], 0.05, 1e-15);
  EXPECT_NEAR(f.output[0], 1.95, 1e-15);
}

TEST(MlpForward, DimensionMismatch) {
  EXPECT_THROW(mlp_forward(hand_net(), Vector::Zero(3)), DimensionMismatch);
}

TEST(MlpForward, Deterministic) {
  const MlpParams p = random_net({6, 16, 16, 4}, 3);
  Rng rng(4);
  const Vector x = random_vector(6, rng);
  EXPECT_EQ(mlp_forward(p, x).output, mlp_forward(p, x).output);
}

TEST(MlpParams, CheckRejectsBrokenChain) {
  MlpParams p = hand_net();
  p.layers[1].weight = Matrix::Zero(1, 3);
  EXPECT_THROW(p.check(), DimensionMismatch);
}

TEST(MlpParams, Shapes) {
  const int dims[] = {42, 64, 64, 128};
  const MlpParams p = init_mlp(dims, 9);
  EXPECT_EQ(p.dims(), (std::vector<int>{42, 64, 64, 128}));
  EXPECT_EQ(p.parameter_count(), 42u * 64 + 64 + 64 * 64 + 64 + 64 * 128 + 128);
  EXPECT_EQ(flatten(p).size(), p.parameter_count());
}

TEST(InitMlp, GlorotBoundsZeroBiasesSeeded) {
  const int dims[] = {10, 30};
  const MlpParams p = init_mlp(dims, 5);
  const double bound = std::sqrt(6.0 / 40.0);
  EXPECT_LE(p.layers[0].weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(p.layers[0].weight.cwiseAbs().maxCoeff(), 0.5 * bound);
  EXPECT_EQ(p.layers[0].bias, Vector::Zero(30));
  EXPECT_EQ(flatten(init_mlp(dims, 5)), flatten(p));
  EXPECT_NE(flatten(init_mlp(dims, 6)), flatten(p));
}

TEST(Flatten, RoundTrip) {
  const MlpParams p = random_net({4, 7, 3}, 8);
  MlpParams q = p.zeros_like();
  unflatten(flatten(p), q);
  EXPECT_EQ(flatten(q), flatten(p));
  EXPECT_EQ(flatten(p)[1], p.layers[0].weight(0, 1));
  EXPECT_THROW(unflatten(std::vector<double>(3), q), DimensionMismatch);
}

TEST(MlpBackward, IdentityPassesGradient) {
  MlpParams p;
  p.layers.push_back({Matrix::Identity(3, 3), Vector::Zero(3)});
  const Vector g(Eigen::Vector3d(0.5, -2, 1));
  const MlpForward f = mlp_forward(p, Vector::Ones(3));
  EXPECT_EQ(mlp_backward(p, f.tape, g).input_grad, g);
}

TEST(MlpBackward, DeadUnitsBlockGradient) {
  MlpParams p;
  p.layers.push_back({Matrix::Identity(2, 2), Vector::Constant(2, -5.0)});
  p.layers.push_back({Matrix::Ones(1, 2), Vector::Zero(1)});
  const MlpForward f = mlp_forward(p, Vector::Ones(2));
  const MlpBackward b = mlp_backward(p, f.tape, Vector::Ones(1));
  EXPECT_EQ(b.input_grad, Vector::Zero(2));
  EXPECT_EQ(b.param_grads.layers[0].weight, Matrix::Zero(2, 2));
  EXPECT_EQ(b.param_grads.layers[0].bias, Vector::Zero(2));
}

TEST(MlpBackward, ReluSubgradientAtZeroIsZero) {
  MlpParams p;
  p.layers.push_back({Matrix::Identity(1, 1), Vector::Zero(1)});
  p.layers.push_back({Matrix::Ones(1, 1), Vector::Zero(1)});
  const MlpForward f = mlp_forward(p, Vector::Zero(1));
  EXPECT_EQ(mlp_backward(p, f.tape, Vector::Ones(1)).input_grad[0], 0.0);
}

TEST(MlpBackward, ShapeMismatch) {
  const MlpParams p = hand_net();
  const MlpForward f = mlp_forward(p, Eigen::Vector2d(1, -1));
  EXPECT_THROW(mlp_backward(p, f.tape, Vector::Ones(2)), DimensionMismatch);
}

TEST(MlpBackward, AccumulateSumsGradients) {
  const MlpParams p = random_net({3, 5, 2}, 10);
  Rng rng(11);
  const Vector x1 = random_vector(3, rng), x2 = random_vector(3, rng), g = random_vector(2, rng);
  MlpParams acc = p.zeros_like();
  mlp_backward_accumulate(p, mlp_forward(p, x1).tape, g, acc);
  mlp_backward_accumulate(p, mlp_forward(p, x2).tape, g, acc);
  const auto a = flatten(mlp_backward(p, mlp_forward(p, x1).tape, g).param_grads);
  const auto b = flatten(mlp_backward(p, mlp_forward(p, x2).tape, g).param_grads);
  const auto s = flatten(acc);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], a[i] + b[i], 1e-15);
}

TEST(Gradcheck, RandomThreeLayerMlpParameters) {
  const MlpParams p = random_net({6, 16, 16, 4}, 12);
  Rng rng(13);
  const Vector x = random_vector(6, rng);
  const Vector c = random_vector(4, rng);
  const MlpForward f = mlp_forward(p, x);
  const auto analytic = flatten(mlp_backward(p, f.tape, c).param_grads);
  MlpParams work = p;
  const ScalarMap map = [&](std::span<const double> flat) {
    unflatten(flat, work);
    const MlpForward g = mlp_forward(work, x);
    return Evaluation{g.output.dot(c), activation_signature(g.tape)};
  };
  GradcheckOptions opts;
  opts.probes = 0;
  const GradcheckReport r = gradcheck(map, flatten(p), analytic, opts);
  EXPECT_EQ(r.probed + r.skipped, static_cast<int>(p.parameter_count()));
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Gradcheck, RandomThreeLayerMlpInput) {
  const MlpParams p = random_net({6, 16, 16, 4}, 14);
  Rng rng(15);
  const Vector x = random_vector(6, rng);
  const Vector c = random_vector(4, rng);
  const Vector analytic = mlp_backward(p, mlp_forward(p, x).tape, c).input_grad;
  const ScalarMap map = [&](std::span<const double> in) {
    const MlpForward g = mlp_forward(p, Eigen::Map<const Vector>(in.data(), 6));
    return Evaluation{g.output.dot(c), activation_signature(g.tape)};
  };
  const std::vector<double> xs(x.data(), x.data() + 6);
  const std::vector<double> as(analytic.data(), analytic.data() + 6);
  EXPECT_LT(gradcheck(map, xs, as).max_rel_error, 1e-6);
}

TEST(Gradcheck, LinearMapIsExact) {
  const std::vector<double> a{1.5, -2.0, 0.25};
  const ScalarMap map = [&](std::span<const double> x) {
    return Evaluation{a[0] * x[0] + a[1] * x[1] + a[2] * x[2], 0};
  };
  EXPECT_LT(gradcheck(map, std::vector<double>{0.3, -0.1, 2.0}, a).max_rel_error, 1e-10);
}

TEST(Gradcheck, DetectsWrongGradient) {
  const ScalarMap map = [](std::span<const double> x) { return Evaluation{x[0] * x[0], 0}; };
  EXPECT_GT(gradcheck(map, std::vector<double>{1.0}, std::vector<double>{2.02}).max_rel_error, 1e-3);
}

TEST(Gradcheck, SkipsProbesAcrossKinks) {
  // |x| at x = 1e-7: the central difference straddles the kink.
  const ScalarMap map = [](std::span<const double> x) {
    return Evaluation{std::abs(x[0]), x[0] > 0 ? 1u : 0u};
  };
  const GradcheckReport r = gradcheck(map, std::vector<double>{1e-7}, std::vector<double>{1.0});
  EXPECT_EQ(r.skipped, 1);
  EXPECT_EQ(r.probed, 0);
}

TEST(Gradcheck, ReluAwayFromKinks) {
  MlpParams p = random_net({4, 8, 1}, 16);
  Rng rng(17);
  Vector x = random_vector(4, rng);
  const MlpForward f = mlp_forward(p, x);
  for (Eigen::Index i = 0; i < f.tape.preacts[0].size(); ++i) ASSERT_GT(std::abs(f.tape.preacts[0][i]), 1e-3);
  const auto analytic = flatten(mlp_backward(p, f.tape, Vector::Ones(1)).param_grads);
  MlpParams work = p;
  const ScalarMap map = [&](std::span<const double> flat) {
    unflatten(flat, work);
    const MlpForward g = mlp_forward(work, x);
    return Evaluation{g.output[0], activation_signature(g.tape)};
  };
  GradcheckOptions opts;
  opts.probes = 0;
  const GradcheckReport r = gradcheck(map, flatten(p), analytic, opts);
  EXPECT_EQ(r.skipped, 0);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Softmax, EqualLogits) {
  const Vector p = softmax_stable(Vector::Constant(3, 4.2));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const Vector p = softmax_stable(Eigen::Vector2d(1000, 0));
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-12);
}

TEST(Softmax, HandOracle) {
  const Vector p = softmax_stable(Eigen::Vector2d(0, std::log(3.0)));
  EXPECT_NEAR(p[0], 0.25, 1e-12);
  EXPECT_NEAR(p[1], 0.75, 1e-12);
}

TEST(Softmax, SumAndShiftInvariance) {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector z = 5.0 * random_vector(7, rng);
    const Vector p = softmax_stable(z);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GT(p.minCoeff(), 0.0);
    const Vector q = softmax_stable(z + Vector::Constant(7, rng.uniform(-50, 50)));
    EXPECT_LE((p - q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
  Rng rng(19);
  const Vector z = random_vector(5, rng);
  const Vector c = random_vector(5, rng);
  const Vector analytic = softmax_backward(softmax_stable(z), c);
  const ScalarMap map = [&](std::span<const double> in) {
    return Evaluation{softmax_stable(Eigen::Map<const Vector>(in.data(), 5)).dot(c), 0};
  };
  const std::vector<double> zs(z.data(), z.data() + 5);
  const std::vector<double> as(analytic.data(), analytic.data() + 5);
  EXPECT_LT(gradcheck(map, zs, as).max_rel_error, 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  MlpParams p = random_net({3, 4, 2}, 20);
  const auto before = flatten(p);
  AdamState s = AdamState::for_params(p);
  for (int i = 0; i < 3; ++i) adam_step(p, p.zeros_like(), s);
  EXPECT_EQ(flatten(p), before);
  EXPECT_EQ(s.step, 3);
}

TEST(Adam, ScalarTwoStepOracle) {
  MlpParams p;
  p.layers.push_back({Matrix::Constant(1, 1, 0.5), Vector::Zero(1)});
  MlpParams g = p.zeros_like();
  g.layers[0].weight(0, 0) = 0.2;
  AdamState s = AdamState::for_params(p);
  adam_step(p, g, s);
  EXPECT_NEAR(p.layers[0].weight(0, 0), 0.49900000005, 1e-15);
  adam_step(p, g, s);
  EXPECT_NEAR(p.layers[0].weight(0, 0), 0.4980000001, 1e-15);
  EXPECT_EQ(p.layers[0].bias[0], 0.0);
}

TEST(Adam, ShapeMismatch) {
  MlpParams p = random_net({3, 4, 2}, 21);
  AdamState s = AdamState::for_params(p);
  const MlpParams other = random_net({3, 5, 2}, 21);
  EXPECT_THROW(adam_step(p, other, s), DimensionMismatch);
}

TEST(Serialization, RoundTripIsExact) {
  const MlpParams p = random_net({5, 9, 3}, 22);
  std::uint64_t seed = 0;
  const MlpParams q = mlp_from_json(nlohmann::json::parse(mlp_to_json(p, 22).dump()), &seed);
  EXPECT_EQ(seed, 22u);
  EXPECT_EQ(flatten(q), flatten(p));
  EXPECT_EQ(q.dims(), p.dims());
}

TEST(Serialization, Layout) {
  const nlohmann::json doc = mlp_to_json(hand_net(), 3);
  EXPECT_EQ(doc["meta"]["dims"], nlohmann::json::parse("[2, 2, 1]"));
  EXPECT_EQ(doc["layers"][0]["w"][0][1], -0.25);
  EXPECT_EQ(doc["layers"][1]["b"][0], 0.3);
}

TEST(Serialization, RejectsMalformed) {
  EXPECT_THROW(mlp_from_json(nlohmann::json::parse(R"({"layers": 3})")), MalformedInput);
  EXPECT_THROW(mlp_from_json(nlohmann::json::parse(R"({"layers": [{"w": [[1, 2]], "b": [1, 2]}]})")),
               MalformedInput);
  EXPECT_THROW(mlp_from_json(nlohmann::json::parse(
                   R"({"layers": [{"w": [[1, 2]], "b": [0]}, {"w": [[1, 2]], "b": [0]}]})")),
               MalformedInput);
}
