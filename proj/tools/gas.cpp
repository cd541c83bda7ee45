// SPDX-FileCopyrightText: 2026 gas authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, apply, bench, gradcheck, eval.
// Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure
// (training nan-halt, gradcheck over threshold).

#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "gas/common.hpp"
#include "gas/deploy.hpp"
#include "gas/evalkit.hpp"
#include "gas/params.hpp"
#include "gas/png_io.hpp"
#include "gas/trainer.hpp"

namespace {

int cmd_train(const gas::TrainConfig& cfg) {
  gas::TrainResult res = gas::train(cfg);
  std::printf("steps %ld loss_d %.6f loss_g %.6f%s\n", res.steps_done,
              res.last_loss_d, res.last_loss_g,
              res.nan_halted ? " nan-halt" : "");
  return res.nan_halted ? 2 : 0;
}

struct ApplyFlags {
  std::string params_path, input_path, output_path;
  uint64_t frame = 0, seed = 0;
  bool no_noise = false;
};

int cmd_apply(const ApplyFlags& f) {
  gas::PipelineParams p = gas::load_params(f.params_path);
  if (f.no_noise) {
    p.noise.gamma_raw = -HUGE_VAL;
    p.noise.sigma_raw = -HUGE_VAL;
  }
  gas::CompiledPipeline cp = gas::compile(p);
  gas::ImageBuf img = gas::load_png(f.input_path);
  gas::ImageBuf out = gas::run_frame(cp, img, f.frame, f.seed);
  gas::save_png(f.output_path, out);
  return 0;
}

struct BenchFlags {
  std::string params_path;
  int width = 1920, height = 1080, frames = 30;
  uint64_t seed = 1;
};

int cmd_bench(const BenchFlags& f) {
  gas::PipelineParams p = f.params_path.empty()
                              ? gas::default_init_params()
                              : gas::load_params(f.params_path);
  gas::CompiledPipeline cp = gas::compile(p);
  gas::FrameStats st = gas::bench(cp, f.width, f.height, f.frames, f.seed);
  std::printf("%s\n", st.report().c_str());
  return 0;
}

struct GradcheckFlags {
  std::string params_path;
  uint64_t seed = 1;
  int size = 16;
  double h = 2e-3, threshold = 1e-3;
};

int cmd_gradcheck(const GradcheckFlags& f) {
  gas::PipelineParams p = f.params_path.empty()
                              ? gas::default_init_params()
                              : gas::load_params(f.params_path);
  gas::CounterRng rng(f.seed, (9ull << 56) | 3);
  gas::ImageBuf img(f.size, f.size, 3, gas::ColorSpace::gamma_encoded);
  for (size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = 0.05 + 0.9 * rng.uniform_at(i);
  gas::GradCheckReport rep =
      gas::gradcheck(p, img, f.seed, f.h, f.threshold);
  for (const auto& e : rep.entries)
    std::printf("%-22s analytic % .9e fd % .9e rel %.3e\n", e.name.c_str(),
                e.analytic, e.fd, e.rel_err);
  std::printf("worst %s %.3e %s\n", rep.worst_name.c_str(), rep.worst_rel,
              rep.passed ? "PASS" : "FAIL");
  return rep.passed ? 0 : 2;
}

struct EvalFlags {
  std::string params_path, source_dir, target_dir;
  uint64_t seed = 0;
};

int cmd_eval(const EvalFlags& f) {
  gas::PipelineParams p = gas::load_params(f.params_path);
  gas::EvalMetrics m = gas::eval_run(p, f.source_dir, f.target_dir, f.seed);
  std::printf("%s%s", m.table().c_str(), m.kv_lines().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Differentiable camera pipeline: adversarial training and fused "
      "inference. GAS_THREADS caps worker threads."};
  app.name("gas");  // stable usage text regardless of the invocation path
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  gas::TrainConfig tc;
  std::string train_metrics;
  CLI::App* train = app.add_subcommand("train", "Adversarial training");
  train->add_option("--source", tc.source_dir, "Source image directory")
      ->required();
  train->add_option("--target", tc.target_dir, "Target photo directory")
      ->required();
  train->add_option("--out", tc.out_path, "Output parameter file")->required();
  train->add_option("--metrics", train_metrics,
                    "Loss log path (default <out>.metrics)");
  train->add_option("--steps", tc.steps, "Training steps");
  train->add_option("--crop", tc.crop, "Square crop size");
  train->add_option("--edge-crop", tc.edge_crop,
                    "Border trim before the discriminator");
  train->add_option("--batch", tc.batch, "Crops per step");
  train->add_option("--lr-g", tc.lr_g, "Pipeline learning rate");
  train->add_option("--lr-d", tc.lr_d, "Discriminator learning rate");
  train->add_option("--noise-start", tc.instance_noise_start,
                    "Initial discriminator instance noise");
  train->add_option("--noise-end", tc.instance_noise_end,
                    "Final discriminator instance noise");
  train->add_option("--checkpoint-every", tc.checkpoint_every,
                    "Checkpoint interval in steps (0: only final)");
  train->add_option("--seed", tc.seed, "Random seed");
  train->add_flag("--freeze-lens", tc.freeze_lens, "Do not train lens blur");
  train->add_flag("--freeze-color", tc.freeze_color, "Do not train color map");
  train->add_flag("--freeze-bloom", tc.freeze_bloom, "Do not train bloom");
  train->add_flag("--freeze-noise", tc.freeze_noise, "Do not train noise");
  train->add_flag("--early-stop", tc.early_stop,
                  "Stop on discriminator-loss plateau");

  ApplyFlags af;
  CLI::App* apply = app.add_subcommand("apply", "Process one image");
  apply->add_option("--params", af.params_path, "Parameter file")->required();
  apply->add_option("--input", af.input_path, "Input PNG")->required();
  apply->add_option("--output", af.output_path, "Output PNG")->required();
  apply->add_option("--frame", af.frame, "Frame index (noise stream)");
  apply->add_option("--seed", af.seed, "Random seed");
  apply->add_flag("--no-noise", af.no_noise, "Disable sensor noise");

  BenchFlags bf;
  CLI::App* bench = app.add_subcommand("bench", "Time the fused path");
  bench->add_option("--params", bf.params_path,
                    "Parameter file (default: fresh init)");
  bench->add_option("--width", bf.width, "Frame width")
      ->check(CLI::PositiveNumber);
  bench->add_option("--height", bf.height, "Frame height")
      ->check(CLI::PositiveNumber);
  bench->add_option("--frames", bf.frames, "Timed frames")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", bf.seed, "Random seed");

  GradcheckFlags gf;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gradcheck->add_option("--params", gf.params_path,
                        "Parameter file (default: fresh init)");
  gradcheck->add_option("--seed", gf.seed, "Random seed");
  gradcheck->add_option("--size", gf.size, "Test image side length")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--step", gf.h, "Base finite-difference step");
  gradcheck->add_option("--threshold", gf.threshold,
                        "Relative-error pass threshold");

  EvalFlags ef;
  CLI::App* eval = app.add_subcommand("eval", "Histogram distances to target");
  eval->add_option("--params", ef.params_path, "Parameter file")->required();
  eval->add_option("--source", ef.source_dir, "Source image directory")
      ->required();
  eval->add_option("--target", ef.target_dir, "Target photo directory")
      ->required();
  eval->add_option("--seed", ef.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      tc.metrics_path =
          train_metrics.empty() ? tc.out_path + ".metrics" : train_metrics;
      return cmd_train(tc);
    }
    if (*apply) return cmd_apply(af);
    if (*bench) return cmd_bench(bf);
    if (*gradcheck) return cmd_gradcheck(gf);
    if (*eval) return cmd_eval(ef);
  } catch (const gas::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
