#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "camweight/errors.hpp"
#include "camweight/metrics.hpp"
#include "camweight/renderer.hpp"
#include "camweight/rng.hpp"

using namespace camweight;

namespace {

Frustum camera_at(const Vec3& eye) {
  Frustum f;
  f.pose = look_at(eye, Vec3::Zero());
  return f;
}

Scene empty_scene() {
  Scene s;
  s.blobs.push_back({Vec3::Zero(), 0.3, {1, 1, 1}, 0.0});
  return s;
}

Scene opaque_ball() {
  Scene s;
  s.blobs.push_back({Vec3::Zero(), 0.6, {0.9, 0.8, 0.2}, 400.0});
  return s;
}

Scene faint_scene() {
  Scene s;
  s.blobs.push_back({{0.2, 0.1, 0.0}, 0.6, {0.9, 0.2, 0.1}, 0.4});
  s.blobs.push_back({{-0.3, -0.2, 0.2}, 0.7, {0.1, 0.5, 0.9}, 0.3});
  return s;
}

std::vector<FeatureVolume> encode_all(const Scene& s, const std::vector<Frustum>& cams, VolumeResolution res = {}) {
  std::vector<FeatureVolume> out;
  for (const Frustum& f : cams) out.push_back(encode_source_view(s, f, res));
  return out;
}

double max_pixel(const Image& img) { return *std::max_element(img.data().begin(), img.data().end()); }

}  // namespace

TEST(RenderGroundTruth, EmptySceneIsBlack) {
  const Image img = render_ground_truth(empty_scene(), camera_at({0, 0, 4}), {16, 16, 32, 1});
  EXPECT_EQ(max_pixel(img), 0.0);
}

TEST(RenderGroundTruth, CenteredBlobBrightestAtCenter) {
  Scene scene;
  scene.blobs.push_back({Vec3::Zero(), 0.6, {0.9, 0.8, 0.2}, 3.0});
  const Image img = render_ground_truth(scene, camera_at({0, 0, 4}), {33, 33, 64, 2});
  const double center = img.at(16, 16, 0);
  for (int y = 0; y < 33; y += 4) {
    for (int x = 0; x < 33; x += 4) EXPECT_LE(img.at(x, y, 0), center);
  }
  EXPECT_LT(img.at(0, 0, 0), 0.01);
}

TEST(RenderGroundTruth, ConvergesWithSampleCount) {
  const Scene scene = generate_scene(derive_seed(11, 0));
  const Frustum f = sample_camera(derive_seed(12, 0));
  const Image ref = render_ground_truth(scene, f, {64, 64, 256, 7});
  const double p32 = psnr(render_ground_truth(scene, f, {64, 64, 32, 7}), ref);
  const double p64 = psnr(render_ground_truth(scene, f, {64, 64, 64, 7}), ref);
  const double p128 = psnr(render_ground_truth(scene, f, {64, 64, 128, 7}), ref);
  EXPECT_LT(p32, p64);
  EXPECT_LT(p64, p128);
  EXPECT_GT(p64, 50.0);
}

TEST(RenderGroundTruth, BenchPsnrStableUnderDoubledSamples) {
  // Novel view at N and 2N samples, both scored against a 4N ground truth.
  const Scene scene = generate_scene(derive_seed(13, 1));
  const Frustum target = sample_camera(derive_seed(14, 1));
  std::vector<Frustum> cams;
  for (int i = 0; i < 5; ++i) cams.push_back(sample_camera(derive_seed(15, static_cast<std::uint64_t>(i))));
  const auto volumes = encode_all(scene, cams);
  const Image ref = render_ground_truth(scene, target, {64, 64, 256, 9});
  const WeightVector w = uniform_weights(5);
  const double p64 = psnr(render_novel_view(volumes, target, w, {64, 64, 64, 9}), ref);
  const double p128 = psnr(render_novel_view(volumes, target, w, {64, 64, 128, 9}), ref);
  EXPECT_LT(std::abs(p128 - p64), 0.5);
}

TEST(RenderGroundTruth, DeterministicPerSeed) {
  const Scene scene = generate_scene(4);
  const Frustum f = sample_camera(5);
  EXPECT_EQ(render_ground_truth(scene, f, {16, 16, 32, 3}), render_ground_truth(scene, f, {16, 16, 32, 3}));
  EXPECT_FALSE(render_ground_truth(scene, f, {16, 16, 32, 3}) == render_ground_truth(scene, f, {16, 16, 32, 4}));
}

TEST(RenderGroundTruth, RejectsBadSettings) {
  EXPECT_THROW(render_ground_truth(opaque_ball(), camera_at({0, 0, 4}), {0, 16, 32, 1}), InvalidConfig);
  EXPECT_THROW(render_ground_truth(opaque_ball(), camera_at({0, 0, 4}), {16, 16, 0, 1}), InvalidConfig);
}

TEST(CompositeRay, TransmittanceNonIncreasing) {
  Rng rng(6);
  std::vector<double> density(64);
  std::vector<Vec3> color(64);
  for (int i = 0; i < 64; ++i) {
    density[static_cast<std::size_t>(i)] = rng.uniform(0, 5) * (i % 3 == 0);
    color[static_cast<std::size_t>(i)] = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
  }
  std::vector<double> t;
  const Vec3 c = composite_ray(density, color, 0.07, &t);
  ASSERT_EQ(t.size(), 64u);
  EXPECT_EQ(t[0], 1.0);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t[i], t[i - 1]);
  EXPECT_GE(c.minCoeff(), 0.0);
  EXPECT_LE(c.maxCoeff(), 1.0);
}

TEST(CompositeRay, OpaqueFirstSampleGivesItsColor) {
  const std::vector<double> density{1e6, 3.0};
  const std::vector<Vec3> color{{0.2, 0.4, 0.6}, {1, 1, 1}};
  EXPECT_NEAR((composite_ray(density, color, 0.1) - Vec3(0.2, 0.4, 0.6)).norm(), 0.0, 1e-12);
}

TEST(EncodeSourceView, EmptySceneAllValidZero) {
  const FeatureVolume v = encode_source_view(empty_scene(), camera_at({0, 0, 4}), {8, 8, 8});
  for (int k = 0; k < 8; ++k) {
    for (int j = 0; j < 8; ++j) {
      for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(v.cell(i, j, k)[3], 0.0);
        EXPECT_EQ(v.cell(i, j, k)[4], 1.0);
      }
    }
  }
}

TEST(EncodeSourceView, CellsBehindOpaqueBallAreInvalid) {
  const FeatureVolume v = encode_source_view(opaque_ball(), camera_at({0, 0, 4}), {16, 16, 32});
  // Central ray: depth 2..6, the ball surface is near depth 3.6.
  EXPECT_EQ(v.cell(8, 8, 2)[4], 1.0);
  for (int k = 24; k < 32; ++k) {
    for (int ch = 0; ch < kCellChannels; ++ch) EXPECT_EQ(v.cell(8, 8, k)[ch], 0.0);
  }
  // A ray missing the ball stays valid all the way.
  for (int k = 0; k < 32; ++k) EXPECT_EQ(v.cell(0, 0, k)[4], 1.0);
}

TEST(EncodeSourceView, TransparentVolumeConvergesToField) {
  const Scene scene = faint_scene();
  const Frustum f = camera_at({0.3, 0.5, 4});
  Rng rng(7);
  std::vector<Vec3> points;
  for (int i = 0; i < 400; ++i) points.emplace_back(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
  double previous = INFINITY;
  for (int res : {12, 24, 48}) {
    const FeatureVolume v = encode_source_view(scene, f, {res, res, res});
    double err = 0.0;
    for (const Vec3& p : points) {
      const VolumeSample s = sample_volume(v, p);
      ASSERT_NEAR(s.validity, 1.0, 1e-12);
      err += std::abs(s.latent[3] - field_query(scene, p).density);
    }
    err /= static_cast<double>(points.size());
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 0.01);
}

TEST(SampleVolume, CellCenterReturnsCell) {
  const FeatureVolume v = encode_source_view(generate_scene(8), camera_at({0, 0, 4}), {10, 12, 14});
  for (auto [i, j, k] : {std::tuple{3, 4, 5}, std::tuple{0, 0, 0}, std::tuple{9, 11, 13}}) {
    const VolumeSample s = sample_volume(v, v.cell_center(i, j, k));
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(s.latent[c], v.cell(i, j, k)[c], 1e-9);
    EXPECT_NEAR(s.validity, v.cell(i, j, k)[4], 1e-9);
  }
}

TEST(SampleVolume, OutsideFrustumIsZero) {
  const FeatureVolume v = encode_source_view(opaque_ball(), camera_at({0, 0, 4}), {8, 8, 8});
  for (const Vec3& p : {Vec3(0, 0, -2.5), Vec3(0, 0, 2.5), Vec3(3, 0, 0)}) {
    const VolumeSample s = sample_volume(v, p);
    EXPECT_EQ(s.latent, Eigen::Vector4d::Zero());
    EXPECT_EQ(s.validity, 0.0);
  }
}

TEST(SampleVolume, MidpointAveragesNeighbours) {
  FeatureVolume v(camera_at({0, 0, 4}), {4, 4, 4});
  for (int c = 0; c < kCellChannels; ++c) {
    v.cell(1, 2, 1)[c] = 1.0 + c;
    v.cell(1, 2, 2)[c] = 3.0 + 2 * c;
  }
  // Same pixel ray, halfway between the two depth slices.
  const Vec3 mid = 0.5 * (v.cell_center(1, 2, 1) + v.cell_center(1, 2, 2));
  const VolumeSample s = sample_volume(v, mid);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(s.latent[c], 0.5 * ((1.0 + c) + (3.0 + 2 * c)), 1e-12);
  EXPECT_NEAR(s.validity, 0.5 * (5.0 + 11.0), 1e-12);
}

TEST(RenderNovelView, SelfReconstruction) {
  const Scene scene = generate_scene(derive_seed(11, 0));
  const Frustum f = sample_camera(derive_seed(12, 0));
  const std::vector<FeatureVolume> v{encode_source_view(scene, f, {64, 64, 64})};
  const RenderSettings st{64, 64, 64, 7};
  EXPECT_GT(psnr(render_novel_view(v, f, uniform_weights(1), st), render_ground_truth(scene, f, st)), 25.0);
}

TEST(RenderNovelView, UniformMatchesMeanRenderer) {
  const Scene scene = generate_scene(9);
  const Frustum target = sample_camera(10);
  std::vector<Frustum> cams;
  for (int i = 0; i < 5; ++i) cams.push_back(sample_camera(derive_seed(20, static_cast<std::uint64_t>(i))));
  const RenderSettings st{24, 24, 48, 11};
  for (std::size_t s : {1u, 2u, 4u}) {
    const auto v = encode_all(scene, std::vector<Frustum>(cams.begin(), cams.begin() + static_cast<long>(s)));
    EXPECT_EQ(render_novel_view(v, target, uniform_weights(s), st), render_mean_view(v, target, st));
  }
  // 1/S is inexact for other counts, so the two orders of rounding differ slightly.
  for (std::size_t s : {3u, 5u}) {
    const auto v = encode_all(scene, std::vector<Frustum>(cams.begin(), cams.begin() + static_cast<long>(s)));
    const Image a = render_novel_view(v, target, uniform_weights(s), st);
    const Image b = render_mean_view(v, target, st);
    for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
  }
}

TEST(RenderNovelView, InformativeSourceBeatsAveraging) {
  const Scene scene = canonical_two_blob_scene();
  const Frustum target = camera_at({0, 0, 4});
  const auto v = encode_all(scene, {target, camera_at({0, 0, -4})});
  const RenderSettings st{32, 32, 64, 12};
  const Image truth = render_ground_truth(scene, target, st);
  const double one_hot = psnr(render_novel_view(v, target, WeightVector::from_values({1, 0}), st), truth);
  const double averaged = psnr(render_novel_view(v, target, uniform_weights(2), st), truth);
  EXPECT_GT(one_hot, averaged);
}

TEST(RenderNovelView, OcclusionAsymmetry) {
  const Scene scene = canonical_two_blob_scene();
  const Frustum target = camera_at({0, 0, 4});
  const Frustum near_side = camera_at({4 * std::sin(0.3), 0, 4 * std::cos(0.3)});
  const Frustum far_side = camera_at({0, 0, -4});
  const RenderSettings st{32, 32, 64, 13};
  const Image truth = render_ground_truth(scene, target, st);
  const auto near_v = encode_all(scene, {near_side});
  const auto far_v = encode_all(scene, {far_side});
  const double near_err = mean_squared_error(render_novel_view(near_v, target, uniform_weights(1), st), truth);
  const double far_err = mean_squared_error(render_novel_view(far_v, target, uniform_weights(1), st), truth);
  EXPECT_LT(near_err, far_err);
}

TEST(RenderNovelView, DimensionMismatch) {
  const auto v = encode_all(opaque_ball(), {camera_at({0, 0, 4})}, {4, 4, 4});
  EXPECT_THROW(render_novel_view(v, camera_at({0, 0, 4}), uniform_weights(2), {8, 8, 8, 0}), DimensionMismatch);
}

TEST(RenderNovelView, PixelsInUnitRangeAndDeterministic) {
  const Scene scene = generate_scene(14);
  std::vector<Frustum> cams;
  for (int i = 0; i < 3; ++i) cams.push_back(sample_camera(derive_seed(21, static_cast<std::uint64_t>(i))));
  const auto v = encode_all(scene, cams);
  const Frustum target = sample_camera(22);
  const WeightVector w = WeightVector::from_values({0.6, 0.3, 0.1});
  const Image a = render_novel_view(v, target, w, {20, 20, 32, 5});
  for (double x : a.data()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
  EXPECT_EQ(a, render_novel_view(v, target, w, {20, 20, 32, 5}));
}

TEST(RenderNovelViews, MatchesSingleRenders) {
  const Scene scene = generate_scene(15);
  const auto v = encode_all(scene, {sample_camera(1), sample_camera(2)});
  const Frustum target = sample_camera(3);
  const std::vector<WeightVector> ws{uniform_weights(2), WeightVector::from_values({0.9, 0.1})};
  const RenderSettings st{16, 16, 32, 6};
  const auto images = render_novel_views(v, target, ws, st);
  ASSERT_EQ(images.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(images[i], render_novel_view(v, target, ws[i], st));
}

TEST(RaySampleCache, CompositeMatchesDirectRender) {
  const Scene scene = generate_scene(16);
  const auto v = encode_all(scene, {sample_camera(4), sample_camera(5), sample_camera(6)});
  const Frustum target = sample_camera(7);
  const RenderSettings st{12, 10, 40, 8};
  const RaySampleCache cache = gather_ray_samples(v, target, st);
  const WeightVector w = WeightVector::from_values({0.2, 0.5, 0.3});
  EXPECT_EQ(composite_image(cache, w), render_novel_view(v, target, w, st));
}

TEST(WeightSensitivity, LossMatchesMetricAndGradientMatchesDifferences) {
  const Scene scene = generate_scene(17);
  const auto v = encode_all(scene, {sample_camera(8), sample_camera(9), sample_camera(10)});
  const Frustum target = sample_camera(11);
  const RenderSettings st{10, 10, 32, 9};
  const RaySampleCache cache = gather_ray_samples(v, target, st);
  const Image truth = render_ground_truth(scene, target, st);
  const std::vector<double> w{0.2, 0.5, 0.3};
  const WeightSensitivity s = mse_weight_gradient(cache, WeightVector::from_values(w), truth);
  EXPECT_NEAR(s.loss, mean_squared_error(composite_image(cache, WeightVector::from_values(w)), truth), 1e-15);
  // Directional derivatives along e_i - e_j stay on the simplex.
  const double h = 1e-5;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      std::vector<double> up = w, down = w;
      up[i] += h;
      up[j] -= h;
      down[i] -= h;
      down[j] += h;
      const double numeric = (mse_weight_gradient(cache, WeightVector::from_values(up), truth).loss -
                              mse_weight_gradient(cache, WeightVector::from_values(down), truth).loss) /
                             (2 * h);
      const double analytic = s.grad[static_cast<long>(i)] - s.grad[static_cast<long>(j)];
      EXPECT_LT(std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8}), 1e-6);
    }
  }
}

TEST(AggregationLinearity, ConvexCombinationOfWeights) {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    LatentMatrix l(4, 5);
    for (int i = 0; i < l.size(); ++i) l.data()[i] = rng.uniform(0, 3);
    auto random_w = [&] {
      std::vector<double> raw(5);
      for (double& x : raw) x = rng.uniform(0.01, 1);
      return normalize(raw);
    };
    const WeightVector w1 = random_w(), w2 = random_w();
    const double a = rng.uniform();
    std::vector<double> mix(5);
    for (std::size_t i = 0; i < 5; ++i) mix[i] = a * w1[i] + (1 - a) * w2[i];
    const Eigen::VectorXd lhs = weighted_aggregate(l, normalize(mix));
    const Eigen::VectorXd rhs = a * weighted_aggregate(l, w1) + (1 - a) * weighted_aggregate(l, w2);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MeanSquaredError, Basics) {
  EXPECT_EQ(mean_squared_error(Image(4, 4, 0.2), Image(4, 4, 0.2)), 0.0);
  EXPECT_NEAR(mean_squared_error(Image(4, 4, 0.2), Image(4, 4, 0.7)), 0.25, 1e-15);
  EXPECT_THROW(mean_squared_error(Image(4, 4), Image(4, 5)), DimensionMismatch);
}
