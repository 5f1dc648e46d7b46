#pragma once

#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "camweight/attention.hpp"
#include "camweight/renderer.hpp"
#include "camweight/scene.hpp"
#include "camweight/weighting.hpp"

namespace camweight {

/// Geometry and resolution of the synthetic bench.
struct BenchConfig {
  SceneOptions scene;
  CameraOptions camera;
  VolumeResolution volume;
  int image_size = 64;
  int samples = 64;
};

enum class Protocol { RandomViews, OneCloseView, ViewSweep };

std::string protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

struct ExperimentConfig {
  Protocol protocol = Protocol::RandomViews;
  int scenes = 20;
  int sources = 5;
  double close_angle = 10.0 * std::numbers::pi / 180.0;
  std::vector<int> view_counts{2, 8, 16, 32};
  int sweep_targets = 3;
  std::vector<SchemeConfig> schemes{SchemeConfig::mean(), SchemeConfig::error(1.0)};
  std::uint64_t seed = 0;
  BenchConfig bench;
  std::shared_ptr<const CawModule> caw;  // required when a scheme is caw

  /// Throws InvalidConfig.
  void validate() const;
};

struct ResultRow {
  int scene_id = 0;
  Protocol protocol = Protocol::RandomViews;
  std::string scheme;
  std::string param;
  int num_sources = 0;
  std::uint64_t seed = 0;  // per-scene seed; scene, cameras and jitter all derive from it
  double psnr = 0.0;
  double ssim = 0.0;
};

/// One scene with its cameras, reconstructible from (scene seed, protocol, config).
struct BenchRig {
  Scene scene;
  std::vector<Frustum> targets;
  std::vector<Frustum> sources;
};

std::uint64_t scene_seed(std::uint64_t base_seed, int scene_id);

BenchRig make_random_rig(std::uint64_t seed, int sources, int targets, const BenchConfig& bench);

/// Like make_random_rig, but one source (at a seeded position) lies within
/// close_angle of the single target.
BenchRig make_close_rig(std::uint64_t seed, int sources, double close_angle, const BenchConfig& bench);

CameraRig camera_rig(const Frustum& target, std::span<const Frustum> sources);

RenderSettings render_settings(const BenchConfig& bench, std::uint64_t seed);

std::vector<ResultRow> run_random_views(const ExperimentConfig& cfg);
std::vector<ResultRow> run_one_close_view(const ExperimentConfig& cfg);
std::vector<ResultRow> run_view_sweep(const ExperimentConfig& cfg);
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Header: scene_id,protocol,scheme,param,num_sources,seed,psnr,ssim
std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& text);

struct SummaryRow {
  Protocol protocol = Protocol::RandomViews;
  std::string scheme;
  std::string param;
  int num_sources = 0;
  int count = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Means over scenes, grouped by (protocol, scheme, param, num_sources).
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
std::string summary_to_text(const std::vector<SummaryRow>& summary);

/// Renders the rig's target from the scene using the given scheme.
Image render_rig(const Scene& scene, const CameraRig& rig, const SchemeConfig& scheme, const CawModule* caw,
                 const BenchConfig& bench, std::uint64_t render_seed);

struct CawTrainingConfig {
  int scenes = 50;
  int sources = 5;
  int targets_per_scene = 8;  // each target becomes its own rig over the scene's shared sources
  int epochs = 8;
  std::uint64_t seed = 0;
  int image_size = 16;  // training renders are smaller than evaluation renders
  EmbeddingConfig embedding;
  nn::AdamConfig adam;
  BenchConfig bench;
};

std::vector<TrainingExample> build_training_set(const CawTrainingConfig& cfg);

/// Initializes from cfg.seed (or starts from `initial` when given) and trains on the bench.
TrainResult train_caw_on_bench(const CawTrainingConfig& cfg, const CawModule* initial = nullptr);

std::string loss_history_csv(const std::vector<double>& epoch_mean_loss);

}  // namespace camweight
