// SPDX-License-Identifier: Apache-2.0
//
// hmdtrack — command-line harness for the sparse-sensor motion tracker.
//
// Subcommands: synth, eval, bench, calibrate, init-weights.
// Exit codes: 0 success, 2 input/parse error, 3 degenerate data,
//             4 calibration failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hmdtrack/harness.hpp"

namespace {

int exit_code_for(const hmdtrack::Error& e) {
  switch (e.category()) {
    case hmdtrack::ErrorCategory::kInput: return 2;
    case hmdtrack::ErrorCategory::kDegenerate: return 3;
    case hmdtrack::ErrorCategory::kCalibration: return 4;
  }
  return 2;
}

void print_metrics(const hmdtrack::MetricReport& r) {
  std::printf("  mpjre  %10.4f deg\n", r.mpjre_deg);
  std::printf("  mpjpe  %10.4f cm\n", r.mpjpe_cm);
  if (r.mpjve_cm_s) std::printf("  mpjve  %10.4f cm/s\n", *r.mpjve_cm_s);
  if (r.jitter_1e2_m_s3)
    std::printf("  jitter %10.4f 1e2 m/s^3\n", *r.jitter_1e2_m_s3);
  std::printf("  h-pe   %10.4f cm\n", r.h_pe_cm);
  std::printf("  u-pe   %10.4f cm\n", r.u_pe_cm);
  std::printf("  l-pe   %10.4f cm\n", r.l_pe_cm);
  std::printf("  r-pe   %10.4f cm\n", r.r_pe_cm);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming full-body motion tracking from HMD + sparse IMUs"};
  app.require_subcommand(1);

  std::string scenario_name = "hmd";
  std::string weights_path, skeleton_path, out_path;
  std::vector<std::string> inputs;
  double fps = 60.0;
  int clip_length = 40;
  bool reset_between_clips = false;
  bool bypass_oracle = false;
  std::uint64_t seed = 0;
  int bench_steps = 10000;
  int bench_warmup = 1000;
  double ema_beta = -1.0;

  auto add_scenario = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_name,
                    "Input scenario: hmd, hmd2imus, hmd3imus")
        ->check(CLI::IsMember({"hmd", "hmd2imus", "hmd3imus"}));
  };

  CLI::App* synth = app.add_subcommand(
      "synth", "Synthesize paired sensor/ground-truth datasets from motions");
  add_scenario(synth);
  synth->add_option("--fps", fps, "Target frame rate (integer decimation)");
  synth->add_option("--skeleton", skeleton_path, "Skeleton asset file");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("motions", inputs, "Motion files")->required();

  CLI::App* eval = app.add_subcommand("eval", "Evaluate datasets");
  eval->add_option("--weights", weights_path, "Weight file");
  eval->add_option("--skeleton", skeleton_path, "Skeleton asset file");
  eval->add_option("--clip-length", clip_length, "Frames per clip");
  eval->add_flag("--reset-between-clips", reset_between_clips,
                 "Reset the recurrent state at clip boundaries");
  eval->add_flag("--bypass-oracle", bypass_oracle,
                 "Replay ground truth as predictions (metric-path check)");
  eval->add_option("--seed", seed, "Seed echoed into the report");
  eval->add_option("--ema-beta", ema_beta,
                   "Exponential-moving-average factor for shape smoothing "
                   "(off by default)");
  eval->add_option("--out", out_path, "Report file (JSON)");
  eval->add_option("datasets", inputs, "Dataset files")->required();

  CLI::App* bench = app.add_subcommand("bench", "Measure forward-step latency");
  add_scenario(bench);
  bench->add_option("--weights", weights_path,
                    "Weight file (default: seeded initialization)");
  bench->add_option("--skeleton", skeleton_path, "Skeleton asset file");
  bench->add_option("--seed", seed, "Seed for weights/input synthesis");
  bench->add_option("--steps", bench_steps, "Timed steps")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", bench_warmup, "Warmup steps");
  bench->add_option("--out", out_path, "Report file (JSON)");

  CLI::App* calib = app.add_subcommand("calibrate",
                                       "Calibrate a raw IMU capture");
  calib->add_option("--out", out_path, "Calibration result file");
  calib->add_option("capture", inputs, "Raw capture file")
      ->required()
      ->expected(1);

  CLI::App* initw = app.add_subcommand("init-weights",
                                       "Write freshly initialized weights");
  initw->add_option("--seed", seed, "Initialization seed");
  initw->add_option("--out", out_path, "Weight file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(synth)) {
      const auto result = hmdtrack::run_synth(
          inputs, hmdtrack::parse_scenario(scenario_name), fps, out_path,
          skeleton_path);
      for (const std::string& f : result.outputs)
        std::printf("wrote %s\n", f.c_str());
    } else if (app.got_subcommand(eval)) {
      hmdtrack::RunConfig cfg;
      cfg.weights_path = weights_path;
      cfg.skeleton_path = skeleton_path;
      cfg.dataset_paths = inputs;
      cfg.clip_length = clip_length;
      cfg.reset_between_clips = reset_between_clips;
      cfg.bypass_oracle = bypass_oracle;
      cfg.seed = seed;
      cfg.report_path = out_path;
      if (ema_beta >= 0.0) cfg.ema_beta_smoothing = ema_beta;
      const auto result = hmdtrack::run_eval(cfg);
      bool any_ok = false;
      for (const auto& se : result.sequences) {
        if (se.error.empty()) {
          any_ok = true;
          std::printf("%s: %zu frames\n", se.path.c_str(), se.frames);
        } else {
          std::fprintf(stderr, "%s: %s\n", se.path.c_str(), se.error.c_str());
        }
      }
      if (result.aggregate) {
        std::printf("aggregate:\n");
        print_metrics(*result.aggregate);
      }
      if (!out_path.empty()) std::printf("report: %s\n", out_path.c_str());
      if (!any_ok) return 3;
    } else if (app.got_subcommand(bench)) {
      hmdtrack::RunConfig cfg;
      cfg.scenario = hmdtrack::parse_scenario(scenario_name);
      cfg.weights_path = weights_path;
      cfg.skeleton_path = skeleton_path;
      cfg.seed = seed;
      cfg.report_path = out_path;
      cfg.bench_steps = bench_steps;
      cfg.bench_warmup_steps = bench_warmup;
      const auto r = hmdtrack::run_bench(cfg);
      std::printf("steps/s       %10.1f\n", r.steps_per_s);
      std::printf("mean          %10.4f ms\n", r.mean_ms);
      std::printf("median        %10.4f ms\n", r.median_ms);
      std::printf("p99           %10.4f ms\n", r.p99_ms);
      std::printf("first100 mean %10.4f ms\n", r.first100_mean_ms);
      std::printf("last100 mean  %10.4f ms\n", r.last100_mean_ms);
      if (!out_path.empty()) std::printf("report: %s\n", out_path.c_str());
    } else if (app.got_subcommand(calib)) {
      const auto result = hmdtrack::run_calibrate(inputs[0], out_path);
      for (const auto& [id, role] : result.assignment)
        std::printf("sensor %d -> %s (still residual %.3f deg)\n", id,
                    hmdtrack::sensor_role_name(role),
                    result.still_residual_deg.at(id));
      if (!out_path.empty()) std::printf("wrote %s\n", out_path.c_str());
    } else if (app.got_subcommand(initw)) {
      hmdtrack::run_init_weights(hmdtrack::ModelConfig{}, seed, out_path);
      std::printf("wrote %s\n", out_path.c_str());
    }
  } catch (const hmdtrack::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
