#include "camweight/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

#include "camweight/errors.hpp"
#include "camweight/metrics.hpp"
#include "camweight/rng.hpp"

namespace camweight {

namespace {

// Stream tags for derive_seed.
enum SeedStream : std::uint64_t {
  kSceneStream = 1,
  kTargetStream = 2,
  kSourceStream = 3,
  kCloseStream = 4,
  kCloseSlotStream = 5,
  kJitterStream = 6,
};

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw MalformedInput("bad number in CSV: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<FeatureVolume> encode_sources(const Scene& scene, std::span<const Frustum> sources,
                                          const BenchConfig& bench) {
  std::vector<FeatureVolume> volumes;
  volumes.reserve(sources.size());
  for (const Frustum& f : sources) volumes.push_back(encode_source_view(scene, f, bench.volume));
  return volumes;
}

std::vector<WeightVector> weights_for(const CameraRig& rig, const ExperimentConfig& cfg) {
  std::vector<WeightVector> out;
  out.reserve(cfg.schemes.size());
  for (const SchemeConfig& s : cfg.schemes) {
    const CawModule* caw = s.scheme == Scheme::CrossAttention ? cfg.caw.get() : nullptr;
    out.push_back(compute_weights(rig, s, caw));
  }
  return out;
}

std::uint64_t jitter_seed(std::uint64_t seed, int target) {
  return derive_seed(seed, kJitterStream, static_cast<std::uint64_t>(target));
}

// Renders every scheme for one (target, sources) pair and scores it against ground truth.
std::vector<MetricReport> score_schemes(const Scene& scene, const Frustum& target,
                                        std::span<const Frustum> sources, std::span<const FeatureVolume> volumes,
                                        const ExperimentConfig& cfg, std::uint64_t render_seed) {
  const RenderSettings settings = render_settings(cfg.bench, render_seed);
  const Image truth = render_ground_truth(scene, target, settings);
  const std::vector<WeightVector> weights = weights_for(camera_rig(target, sources), cfg);
  const std::vector<Image> images = render_novel_views(volumes, target, weights, settings);
  std::vector<MetricReport> out;
  out.reserve(images.size());
  for (const Image& img : images) out.push_back(evaluate(img, truth));
  return out;
}

void sort_rows(std::vector<ResultRow>& rows, const ExperimentConfig& cfg) {
  auto scheme_rank = [&](const ResultRow& r) {
    for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
      if (cfg.schemes[i].name() == r.scheme && cfg.schemes[i].param_label() == r.param) return i;
    }
    return cfg.schemes.size();
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    return std::make_tuple(a.scene_id, scheme_rank(a), a.num_sources) <
           std::make_tuple(b.scene_id, scheme_rank(b), b.num_sources);
  });
}

ResultRow make_row(int scene_id, Protocol protocol, const SchemeConfig& scheme, int num_sources,
                   std::uint64_t seed, const MetricReport& m) {
  return {scene_id, protocol, scheme.name(), scheme.param_label(), num_sources, seed, m.psnr, m.ssim};
}

}  // namespace

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::RandomViews: return "random";
    case Protocol::OneCloseView: return "close";
    case Protocol::ViewSweep: return "sweep";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  if (name == "random") return Protocol::RandomViews;
  if (name == "close") return Protocol::OneCloseView;
  if (name == "sweep") return Protocol::ViewSweep;
  throw InvalidConfig("unknown protocol '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (scenes < 1) throw InvalidConfig("scene count must be at least 1");
  if (sources < 1) throw InvalidConfig("source count must be at least 1");
  if (!(close_angle > 0.0 && close_angle < std::numbers::pi)) throw InvalidConfig("close-view threshold must lie in (0, pi)");
  if (schemes.empty()) throw InvalidConfig("no weighting schemes to compare");
  if (protocol == Protocol::ViewSweep) {
    if (view_counts.empty()) throw InvalidConfig("view sweep needs at least one view count");
    for (int c : view_counts) {
      if (c < 1) throw InvalidConfig("view counts must be positive");
    }
    if (sweep_targets < 1) throw InvalidConfig("view sweep needs at least one target per scene");
  }
  for (const SchemeConfig& s : schemes) {
    s.validate();
    if (s.scheme == Scheme::CrossAttention && !caw) throw InvalidConfig("scheme caw needs a trained CAW module");
  }
}

std::uint64_t scene_seed(std::uint64_t base_seed, int scene_id) {
  return derive_seed(base_seed, static_cast<std::uint64_t>(scene_id));
}

BenchRig make_random_rig(std::uint64_t seed, int sources, int targets, const BenchConfig& bench) {
  BenchRig rig;
  rig.scene = generate_scene(derive_seed(seed, kSceneStream), bench.scene);
  for (int t = 0; t < targets; ++t) {
    rig.targets.push_back(sample_camera(derive_seed(seed, kTargetStream, static_cast<std::uint64_t>(t)), bench.camera));
  }
  for (int i = 0; i < sources; ++i) {
    rig.sources.push_back(sample_camera(derive_seed(seed, kSourceStream, static_cast<std::uint64_t>(i)), bench.camera));
  }
  return rig;
}

BenchRig make_close_rig(std::uint64_t seed, int sources, double close_angle, const BenchConfig& bench) {
  BenchRig rig = make_random_rig(seed, sources, 1, bench);
  Rng slot(derive_seed(seed, kCloseSlotStream));
  const int index = slot.uniform_int(0, sources - 1);
  rig.sources[static_cast<std::size_t>(index)] =
      sample_close_view(rig.targets.front(), close_angle, derive_seed(seed, kCloseStream), bench.camera);
  return rig;
}

CameraRig camera_rig(const Frustum& target, std::span<const Frustum> sources) {
  CameraRig rig;
  rig.target = target.pose;
  rig.sources.reserve(sources.size());
  for (const Frustum& f : sources) rig.sources.push_back(f.pose);
  return rig;
}

RenderSettings render_settings(const BenchConfig& bench, std::uint64_t seed) {
  return {bench.image_size, bench.image_size, bench.samples, seed};
}

std::vector<ResultRow> run_random_views(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  for (int id = 0; id < cfg.scenes; ++id) {
    const std::uint64_t seed = scene_seed(cfg.seed, id);
    const BenchRig rig = make_random_rig(seed, cfg.sources, 1, cfg.bench);
    const std::vector<FeatureVolume> volumes = encode_sources(rig.scene, rig.sources, cfg.bench);
    const auto metrics = score_schemes(rig.scene, rig.targets.front(), rig.sources, volumes, cfg, jitter_seed(seed, 0));
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      rows.push_back(make_row(id, Protocol::RandomViews, cfg.schemes[s], cfg.sources, seed, metrics[s]));
    }
  }
  sort_rows(rows, cfg);
  return rows;
}

std::vector<ResultRow> run_one_close_view(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  for (int id = 0; id < cfg.scenes; ++id) {
    const std::uint64_t seed = scene_seed(cfg.seed, id);
    BenchRig rig;
    try {
      rig = make_close_rig(seed, cfg.sources, cfg.close_angle, cfg.bench);
    } catch (const ExhaustedSampling& e) {
      throw ExhaustedSampling("scene " + std::to_string(id) + ": " + e.what());
    }
    const std::vector<FeatureVolume> volumes = encode_sources(rig.scene, rig.sources, cfg.bench);
    const auto metrics = score_schemes(rig.scene, rig.targets.front(), rig.sources, volumes, cfg, jitter_seed(seed, 0));
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      rows.push_back(make_row(id, Protocol::OneCloseView, cfg.schemes[s], cfg.sources, seed, metrics[s]));
    }
  }
  sort_rows(rows, cfg);
  return rows;
}

std::vector<ResultRow> run_view_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const int max_views = *std::max_element(cfg.view_counts.begin(), cfg.view_counts.end());
  std::vector<ResultRow> rows;
  for (int id = 0; id < cfg.scenes; ++id) {
    const std::uint64_t seed = scene_seed(cfg.seed, id);
    // Smaller view counts use a prefix of the same source list.
    const BenchRig rig = make_random_rig(seed, max_views, cfg.sweep_targets, cfg.bench);
    const std::vector<FeatureVolume> volumes = encode_sources(rig.scene, rig.sources, cfg.bench);
    for (int count : cfg.view_counts) {
      const auto n = static_cast<std::size_t>(count);
      std::vector<MetricReport> mean(cfg.schemes.size());
      for (int t = 0; t < cfg.sweep_targets; ++t) {
        const auto metrics = score_schemes(rig.scene, rig.targets[static_cast<std::size_t>(t)],
                                           std::span(rig.sources).first(n), std::span(volumes).first(n), cfg,
                                           jitter_seed(seed, t));
        for (std::size_t s = 0; s < metrics.size(); ++s) {
          mean[s].psnr += metrics[s].psnr / cfg.sweep_targets;
          mean[s].ssim += metrics[s].ssim / cfg.sweep_targets;
        }
      }
      for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
        rows.push_back(make_row(id, Protocol::ViewSweep, cfg.schemes[s], count, seed, mean[s]));
      }
    }
  }
  sort_rows(rows, cfg);
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.protocol) {
    case Protocol::RandomViews: return run_random_views(cfg);
    case Protocol::OneCloseView: return run_one_close_view(cfg);
    case Protocol::ViewSweep: return run_view_sweep(cfg);
  }
  return {};
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "scene_id,protocol,scheme,param,num_sources,seed,psnr,ssim\n";
  for (const ResultRow& r : rows) {
    out += std::to_string(r.scene_id) + ',' + protocol_name(r.protocol) + ',' + r.scheme + ',' + r.param + ',' +
           std::to_string(r.num_sources) + ',' + std::to_string(r.seed) + ',' + format_double(r.psnr) + ',' +
           format_double(r.ssim) + '\n';
  }
  return out;
}

std::vector<ResultRow> rows_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "scene_id,protocol,scheme,param,num_sources,seed,psnr,ssim") {
    throw MalformedInput("CSV header does not match the result schema");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw MalformedInput("CSV row has " + std::to_string(f.size()) + " fields");
    ResultRow r;
    r.scene_id = parse_number<int>(f[0]);
    try {
      r.protocol = parse_protocol(f[1]);
    } catch (const InvalidConfig& e) {
      throw MalformedInput(e.what());
    }
    r.scheme = std::string(f[2]);
    r.param = std::string(f[3]);
    r.num_sources = parse_number<int>(f[4]);
    r.seed = parse_number<std::uint64_t>(f[5]);
    r.psnr = parse_number<double>(f[6]);
    r.ssim = parse_number<double>(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<int, std::string, std::string, int>;
  std::map<Key, SummaryRow> groups;
  for (const ResultRow& r : rows) {
    SummaryRow& g = groups[Key{static_cast<int>(r.protocol), r.scheme, r.param, r.num_sources}];
    g.protocol = r.protocol;
    g.scheme = r.scheme;
    g.param = r.param;
    g.num_sources = r.num_sources;
    ++g.count;
    g.mean_psnr += r.psnr;
    g.mean_ssim += r.ssim;
  }
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    g.mean_psnr /= g.count;
    g.mean_ssim /= g.count;
    out.push_back(g);
  }
  return out;
}

std::string summary_to_text(const std::vector<SummaryRow>& summary) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "protocol" << std::setw(8) << "scheme" << std::setw(12) << "param"
     << std::setw(9) << "sources" << std::setw(7) << "n" << std::setw(11) << "psnr" << "ssim\n";
  os << std::fixed;
  for (const SummaryRow& s : summary) {
    os << std::setw(10) << protocol_name(s.protocol) << std::setw(8) << s.scheme << std::setw(12)
       << (s.param.empty() ? "-" : s.param) << std::setw(9) << s.num_sources << std::setw(7) << s.count
       << std::setw(11) << std::setprecision(4) << s.mean_psnr << std::setprecision(4) << s.mean_ssim << '\n';
  }
  return os.str();
}

Image render_rig(const Scene& scene, const CameraRig& rig, const SchemeConfig& scheme, const CawModule* caw,
                 const BenchConfig& bench, std::uint64_t render_seed) {
  validate_rig(rig);
  auto frustum_for = [&](const Pose& p) {
    Frustum f;
    f.pose = p;
    f.fov_y = bench.camera.fov_y;
    f.aspect = bench.camera.aspect;
    f.z_near = bench.camera.z_near;
    f.z_far = bench.camera.z_far;
    return f;
  };
  std::vector<Frustum> sources;
  for (const Pose& p : rig.sources) sources.push_back(frustum_for(p));
  const std::vector<FeatureVolume> volumes = encode_sources(scene, sources, bench);
  const WeightVector w = compute_weights(rig, scheme, caw);
  return render_novel_view(volumes, frustum_for(rig.target), w, render_settings(bench, render_seed));
}

std::vector<TrainingExample> build_training_set(const CawTrainingConfig& cfg) {
  if (cfg.scenes < 1 || cfg.sources < 1 || cfg.targets_per_scene < 1 || cfg.image_size < 1) {
    throw InvalidConfig("training set sizes must be positive");
  }
  std::vector<TrainingExample> examples;
  examples.reserve(static_cast<std::size_t>(cfg.scenes) * static_cast<std::size_t>(cfg.targets_per_scene));
  for (int id = 0; id < cfg.scenes; ++id) {
    const std::uint64_t seed = scene_seed(cfg.seed, id);
    const BenchRig rig = make_random_rig(seed, cfg.sources, cfg.targets_per_scene, cfg.bench);
    const std::vector<FeatureVolume> volumes = encode_sources(rig.scene, rig.sources, cfg.bench);
    for (int t = 0; t < cfg.targets_per_scene; ++t) {
      const Frustum& target = rig.targets[static_cast<std::size_t>(t)];
      const RenderSettings settings{cfg.image_size, cfg.image_size, cfg.bench.samples, jitter_seed(seed, t)};
      examples.push_back({camera_rig(target, rig.sources), gather_ray_samples(volumes, target, settings),
                          render_ground_truth(rig.scene, target, settings)});
    }
  }
  return examples;
}

TrainResult train_caw_on_bench(const CawTrainingConfig& cfg, const CawModule* initial) {
  const std::vector<TrainingExample> examples = build_training_set(cfg);
  CawModule module = initial ? *initial : CawModule::initialize(cfg.embedding, cfg.seed);
  TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.seed = derive_seed(cfg.seed, 0x7a11);
  opts.adam = cfg.adam;
  return train_caw(std::move(module), examples, opts);
}

std::string loss_history_csv(const std::vector<double>& epoch_mean_loss) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_mean_loss.size(); ++e) {
    out += std::to_string(e) + ',' + format_double(epoch_mean_loss[e]) + '\n';
  }
  return out;
}

}  // namespace camweight
