// camweight: command-line front end for the source-view weighting library.
//
//   camweight weigh --rig rig.json --scheme err --alpha 1
//   camweight render --scene-seed 3 --rig rig.json --scheme mean --out view.ppm
//   camweight experiment close --scenes 20 --sources 5 --seed 1 --out close.csv
//   camweight train-caw --scenes 50 --epochs 8 --seed 1 --out caw.json --loss-out loss.csv
//   camweight gradcheck
//   camweight report --csv close.csv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "camweight/attention.hpp"
#include "camweight/errors.hpp"
#include "camweight/experiment.hpp"
#include "camweight/gradcheck_suite.hpp"
#include "camweight/image.hpp"
#include "camweight/rig_io.hpp"
#include "camweight/weighting.hpp"
#include "json.hpp"

namespace cw = camweight;

namespace {

constexpr int kExitMalformed = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitFailure = 1;

struct SchemeArgs {
  std::string scheme = "mean";
  std::optional<double> alpha;
  std::optional<double> beta;
  double epsilon = cw::kDefaultEpsilon;
  std::string caw_params;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--scheme", scheme, "mean | l1 | fro | gauss | err | caw")->required();
    cmd->add_option("--alpha", alpha, "angle/distance mix for err (default 1)");
    cmd->add_option("--beta", beta, "kernel width for gauss (default 1)");
    cmd->add_option("--epsilon", epsilon, "stabilizer for l1, fro and err");
    cmd->add_option("--caw-params", caw_params, "trained CAW parameters (JSON) for --scheme caw");
  }

  cw::SchemeConfig config() const {
    cw::SchemeConfig cfg;
    cfg.scheme = cw::parse_scheme(scheme);
    cfg.epsilon = epsilon;
    if (cfg.scheme == cw::Scheme::DistGauss) cfg.beta = beta.value_or(1.0);
    if (cfg.scheme == cw::Scheme::Error) cfg.alpha = alpha.value_or(1.0);
    return cfg;
  }

  std::unique_ptr<cw::CawModule> caw() const {
    if (cw::parse_scheme(scheme) != cw::Scheme::CrossAttention) return nullptr;
    if (caw_params.empty()) throw cw::InvalidConfig("--scheme caw needs --caw-params");
    return std::make_unique<cw::CawModule>(cw::load_caw(caw_params));
  }
};

// "name" or "name:param", e.g. "err:1", "gauss:0.3".
cw::SchemeConfig parse_scheme_token(const std::string& token) {
  const auto colon = token.find(':');
  cw::SchemeConfig cfg;
  cfg.scheme = cw::parse_scheme(token.substr(0, colon));
  const std::optional<double> param =
      colon == std::string::npos ? std::nullopt : std::optional<double>(std::stod(token.substr(colon + 1)));
  if (cfg.scheme == cw::Scheme::DistGauss) cfg.beta = param.value_or(1.0);
  if (cfg.scheme == cw::Scheme::Error) cfg.alpha = param.value_or(1.0);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cw::Error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cw::MalformedInput("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int cmd_weigh(const std::string& rig_path, const SchemeArgs& args) {
  const cw::CameraRig rig = cw::load_rig(rig_path);
  const auto caw = args.caw();
  cw::WeighOptions opts;
  opts.on_degenerate = cw::DegeneratePolicy::Throw;
  const cw::WeightVector w = cw::compute_weights(rig, args.config(), caw.get(), opts);
  std::cout << nlohmann::json(w.values()).dump() << '\n';
  return 0;
}

int cmd_render(std::uint64_t scene_seed, std::uint64_t render_seed, const std::string& rig_path,
               const SchemeArgs& args, const std::string& out) {
  const cw::CameraRig rig = cw::load_rig(rig_path);
  const auto caw = args.caw();
  const cw::BenchConfig bench;
  const cw::Scene scene = cw::generate_scene(scene_seed, bench.scene);
  cw::write_ppm(cw::render_rig(scene, rig, args.config(), caw.get(), bench, render_seed), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-view weighting for few-shot novel view synthesis"};
  app.require_subcommand(1);

  // weigh
  auto* weigh = app.add_subcommand("weigh", "print the weight vector for a rig as a JSON array");
  std::string rig_path;
  SchemeArgs weigh_args;
  weigh->add_option("--rig", rig_path, "rig JSON file")->required();
  weigh_args.add_to(weigh);

  // render
  auto* render = app.add_subcommand("render", "render a rig's target view of a generated scene to PPM");
  std::uint64_t scene_seed_value = 0;
  std::uint64_t render_seed = 0;
  std::string render_rig_path;
  std::string render_out;
  SchemeArgs render_args;
  render->add_option("--scene-seed", scene_seed_value, "scene generator seed")->required();
  render->add_option("--render-seed", render_seed, "stratified sampling seed");
  render->add_option("--rig", render_rig_path, "rig JSON file")->required();
  render->add_option("--out", render_out, "output PPM")->required();
  render_args.add_to(render);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run an evaluation protocol and write result rows as CSV");
  std::string protocol;
  cw::ExperimentConfig exp_cfg;
  std::string exp_out;
  std::vector<std::string> scheme_tokens{"mean", "err:1"};
  std::string exp_caw;
  experiment->add_option("protocol", protocol, "random | close | sweep")
      ->required()
      ->check(CLI::IsMember({"random", "close", "sweep"}));
  experiment->add_option("--scenes", exp_cfg.scenes, "number of scenes");
  experiment->add_option("--sources", exp_cfg.sources, "source views per rig (random, close)");
  experiment->add_option("--seed", exp_cfg.seed, "base seed");
  experiment->add_option("--out", exp_out, "output CSV")->required();
  experiment->add_option("--schemes", scheme_tokens, "schemes as name[:param], e.g. mean err:1 gauss:0.3");
  experiment->add_option("--counts", exp_cfg.view_counts, "view counts for the sweep");
  experiment->add_option("--targets", exp_cfg.sweep_targets, "target views per scene in the sweep");
  experiment->add_option("--close-angle", exp_cfg.close_angle, "close-view threshold in radians");
  experiment->add_option("--image-size", exp_cfg.bench.image_size, "render width and height");
  experiment->add_option("--caw-params", exp_caw, "trained CAW parameters for the caw scheme");

  // train-caw
  auto* train = app.add_subcommand("train-caw", "train the cross-attention weighting module on the bench");
  cw::CawTrainingConfig train_cfg;
  std::string train_out;
  std::string loss_out;
  std::string train_init;
  std::string variant = "geometric_mlp";
  train->add_option("--scenes", train_cfg.scenes, "training scenes");
  train->add_option("--targets", train_cfg.targets_per_scene, "target views (rigs) per training scene");
  train->add_option("--epochs", train_cfg.epochs, "passes over the training scenes");
  train->add_option("--seed", train_cfg.seed, "seed for scenes, initialization and shuffling");
  train->add_option("--out", train_out, "trained parameters (JSON)")->required();
  train->add_option("--loss-out", loss_out, "per-epoch mean loss (CSV)");
  train->add_option("--init", train_init, "start from these parameters instead of a fresh initialization");
  train->add_option("--lr", train_cfg.adam.learning_rate, "Adam learning rate");
  train->add_option("--image-size", train_cfg.image_size, "training render width and height");
  train->add_option("--variant", variant, "geometric_mlp | flattened_linear")
      ->check(CLI::IsMember({"geometric_mlp", "flattened_linear"}));

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every analytic gradient");
  cw::GradcheckSuiteOptions gc_opts;
  gradcheck->add_option("--seed", gc_opts.seed, "probe seed");
  gradcheck->add_option("--probes", gc_opts.probes, "coordinates probed per map");
  gradcheck->add_flag("--corrupt-gradients", gc_opts.corrupt_gradients,
                      "negative control: perturb the analytic gradients (must fail)");

  // report
  auto* report = app.add_subcommand("report", "aggregate an experiment CSV into per-scheme means");
  std::string report_csv;
  report->add_option("--csv", report_csv, "experiment CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*weigh) return cmd_weigh(rig_path, weigh_args);
    if (*render) return cmd_render(scene_seed_value, render_seed, render_rig_path, render_args, render_out);
    if (*experiment) {
      exp_cfg.protocol = cw::parse_protocol(protocol);
      exp_cfg.schemes.clear();
      for (const std::string& t : scheme_tokens) exp_cfg.schemes.push_back(parse_scheme_token(t));
      if (!exp_caw.empty()) exp_cfg.caw = std::make_shared<cw::CawModule>(cw::load_caw(exp_caw));
      write_text(exp_out, cw::rows_to_csv(cw::run_experiment(exp_cfg)));
      return 0;
    }
    if (*train) {
      train_cfg.embedding.variant = cw::parse_variant(variant);
      std::optional<cw::CawModule> init;
      if (!train_init.empty()) init = cw::load_caw(train_init);
      const cw::TrainResult result = cw::train_caw_on_bench(train_cfg, init ? &*init : nullptr);
      cw::save_caw(result.module, train_out);
      if (!loss_out.empty()) write_text(loss_out, cw::loss_history_csv(result.epoch_mean_loss));
      return 0;
    }
    if (*gradcheck) {
      bool ok = true;
      for (const cw::GradcheckLine& line : cw::run_gradcheck_suite(gc_opts)) {
        std::cout << cw::format_gradcheck_line(line) << '\n';
        ok = ok && line.passed;
      }
      return ok ? 0 : kExitFailure;
    }
    if (*report) {
      std::cout << cw::summary_to_text(cw::summarize(cw::rows_from_csv(read_text(report_csv))));
      return 0;
    }
  } catch (const cw::MalformedInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const cw::Degenerate& e) {
    std::cerr << "error: degenerate rig: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const cw::DivergedTraining& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
