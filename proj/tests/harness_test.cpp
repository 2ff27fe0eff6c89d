// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hmdtrack/harness.hpp"
#include "calibration_fixtures.hpp"
#include "test_support.hpp"

using namespace hmdtrack;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

ModelConfig small_config() {
  ModelConfig c;
  c.d_model = 32;
  c.feedforward_dim = 32;
  c.head_hidden = 32;
  c.attention_heads = 4;
  return c;
}

// One small weight file + synthesized datasets, shared across cases.
struct Fixture {
  std::filesystem::path dir = temp_dir("hmdtrack_harness");
  std::string weights = (dir / "w.hmdw").string();
  std::string motion1 = (dir / "m1.motion").string();
  std::string motion2 = (dir / "m2.motion").string();

  Fixture() {
    save_weights(init_weights(small_config(), 81), weights);
    save_motion(make_synthetic_motion(82, 90, 60.0), motion1);
    save_motion(make_synthetic_motion(83, 50, 60.0), motion2);
  }
};

} // namespace

TEST_CASE("run_synth writes deterministic datasets with correct masks") {
  Fixture fx;
  const auto out1 = temp_dir("hmdtrack_synth1");
  const auto out2 = temp_dir("hmdtrack_synth2");
  const Scenario sc = Scenario::make(ScenarioTag::kHmd);
  const auto r1 = run_synth({fx.motion1}, sc, 60.0, out1.string());
  const auto r2 = run_synth({fx.motion1}, sc, 60.0, out2.string());
  REQUIRE(r1.outputs.size() == 1);
  CHECK(slurp(r1.outputs[0]) == slurp(r2.outputs[0]));

  const Dataset d = load_dataset(r1.outputs[0]);
  CHECK(d.scenario.tag == ScenarioTag::kHmd);
  for (const FrameInput& f : d.inputs) {
    CHECK(f.mask == std::array<bool, 8>{true, true, true, false, false, false,
                                        true, true});
    for (int i = 54; i <= 98; ++i) CHECK(f.x[i] == 0.0f);
  }
}

TEST_CASE("run_eval bypass mode reports zero errors and a valid schema") {
  Fixture fx;
  const auto out = temp_dir("hmdtrack_eval");
  const auto synth = run_synth({fx.motion1, fx.motion2},
                               Scenario::make(ScenarioTag::kHmd3Imus), 60.0,
                               (out / "data").string());
  RunConfig cfg;
  cfg.dataset_paths = synth.outputs;
  cfg.bypass_oracle = true;
  cfg.report_path = (out / "report.json").string();
  const EvalResult result = run_eval(cfg);
  REQUIRE(result.aggregate.has_value());
  CHECK(result.aggregate->mpjre_deg <= 1e-5);
  CHECK(result.aggregate->mpjpe_cm == 0.0);
  CHECK(*result.aggregate->mpjve_cm_s == 0.0);
  CHECK(*result.aggregate->jitter_1e2_m_s3 > 0.0); // motion's own smoothness

  validate_eval_report(result.report_json);
  const nlohmann::json loaded =
      nlohmann::json::parse(slurp(cfg.report_path));
  validate_eval_report(loaded);
}

TEST_CASE("run_eval with seeded weights is deterministic and finite") {
  Fixture fx;
  const auto out = temp_dir("hmdtrack_eval2");
  const auto synth = run_synth({fx.motion2},
                               Scenario::make(ScenarioTag::kHmd2Imus), 60.0,
                               (out / "data").string());
  RunConfig cfg;
  cfg.dataset_paths = synth.outputs;
  cfg.weights_path = fx.weights;
  const EvalResult a = run_eval(cfg);
  const EvalResult b = run_eval(cfg);
  REQUIRE(a.aggregate.has_value());
  CHECK(std::isfinite(a.aggregate->mpjre_deg));
  CHECK(std::isfinite(a.aggregate->mpjpe_cm));
  CHECK(a.aggregate->mpjpe_cm > 0.0); // untrained weights are not magic

  nlohmann::json ja = a.report_json, jb = b.report_json;
  ja.erase("timestamp");
  jb.erase("timestamp");
  CHECK(ja == jb);
}

TEST_CASE("run_eval continues past broken sequences and reports the error") {
  Fixture fx;
  const auto out = temp_dir("hmdtrack_eval3");
  const auto synth = run_synth({fx.motion2},
                               Scenario::make(ScenarioTag::kHmd), 60.0,
                               (out / "data").string());
  const std::string broken = (out / "broken.dataset").string();
  {
    std::ofstream f(broken);
    f << "HMDTRACK_DATASET v1\nscenario hmd\nfps 60\n"; // truncated
  }
  RunConfig cfg;
  cfg.dataset_paths = {broken, synth.outputs[0]};
  cfg.bypass_oracle = true;
  const EvalResult result = run_eval(cfg);
  CHECK(!result.sequences[0].error.empty());
  CHECK(result.sequences[1].error.empty());
  REQUIRE(result.aggregate.has_value());
}

TEST_CASE("eval fan-out across workers matches single-threaded results") {
  Fixture fx;
  const auto out = temp_dir("hmdtrack_eval4");
  const auto synth = run_synth({fx.motion1, fx.motion2, fx.motion1},
                               Scenario::make(ScenarioTag::kHmd), 60.0,
                               (out / "data").string());
  RunConfig cfg;
  cfg.dataset_paths = synth.outputs;
  cfg.weights_path = fx.weights;
  const EvalResult single = run_eval(cfg);
  setenv("HMDTRACK_WORKERS", "3", 1);
  const EvalResult multi = run_eval(cfg);
  unsetenv("HMDTRACK_WORKERS");
  nlohmann::json ja = single.report_json, jb = multi.report_json;
  ja.erase("timestamp");
  jb.erase("timestamp");
  CHECK(ja == jb);
}

TEST_CASE("reset_between_clips matches manual clip-boundary resets") {
  Fixture fx;
  const Skeleton skel = default_skeleton();
  const NetworkWeights w = load_weights(fx.weights);
  const Motion motion = make_synthetic_motion(84, 25, 60.0);
  const Dataset d = synthesize_dataset(motion, skel,
                                       Scenario::make(ScenarioTag::kHmd), 60.0);
  RunConfig cfg;
  cfg.clip_length = 10;
  cfg.reset_between_clips = true;
  const auto outs = stream_dataset(d, w, skel, cfg);

  StreamState state = StreamState::make(w.config);
  for (std::size_t t = 0; t < d.inputs.size(); ++t) {
    if (t % 10 == 0) reset_state(state);
    const PoseOutput manual = forward_step(state, d.inputs[t], w, skel);
    CHECK(outs[t].theta_raw == manual.theta_raw);
    CHECK(outs[t].beta_raw == manual.beta_raw);
  }
}

TEST_CASE("ema shape smoothing filters beta and keeps the head anchored") {
  Fixture fx;
  const Skeleton skel = default_skeleton();
  const NetworkWeights w = load_weights(fx.weights);
  const Motion motion = make_synthetic_motion(85, 12, 60.0);
  const Dataset d = synthesize_dataset(motion, skel,
                                       Scenario::make(ScenarioTag::kHmd), 60.0);
  RunConfig cfg;
  cfg.ema_beta_smoothing = 0.9;
  const auto smoothed = stream_dataset(d, w, skel, cfg);
  RunConfig raw_cfg;
  const auto raw = stream_dataset(d, w, skel, raw_cfg);

  std::array<double, kNumShapeCoeffs> ema{};
  for (std::size_t t = 0; t < raw.size(); ++t) {
    for (int i = 0; i < kNumShapeCoeffs; ++i)
      ema[i] = t == 0 ? raw[t].beta[i] : 0.9 * ema[i] + 0.1 * raw[t].beta[i];
    for (int i = 0; i < kNumShapeCoeffs; ++i)
      CHECK(std::abs(smoothed[t].beta[i] - ema[i]) <= 1e-12);
    const Vec3 head{static_cast<double>(d.inputs[t].x[0]),
                    static_cast<double>(d.inputs[t].x[1]),
                    static_cast<double>(d.inputs[t].x[2])};
    CHECK(norm(smoothed[t].body.joint_pos[kHeadJoint] - head) <= 1e-6);
  }
}

TEST_CASE("run_bench produces a complete report on a short run") {
  Fixture fx;
  RunConfig cfg;
  cfg.weights_path = fx.weights; // small model keeps this test quick
  cfg.scenario = Scenario::make(ScenarioTag::kHmd2Imus);
  cfg.bench_warmup_steps = 20;
  cfg.bench_steps = 200;
  cfg.report_path =
      (temp_dir("hmdtrack_bench") / "bench.json").string();
  const BenchReport r = run_bench(cfg);
  CHECK(r.steps_per_s > 0.0);
  CHECK(r.mean_ms > 0.0);
  CHECK(r.p99_ms >= r.median_ms);
  const nlohmann::json j = r.to_json();
  for (const char* key : {"steps_per_s", "mean_ms", "median_ms", "p99_ms",
                          "first100_mean_ms", "last100_mean_ms",
                          "first_half_steps_per_s", "stage_ms_per_step"})
    CHECK(j.contains(key));
  CHECK(j.at("stage_ms_per_step").contains("attention"));
  const nlohmann::json loaded = nlohmann::json::parse(slurp(cfg.report_path));
  CHECK(loaded.at("kind") == "bench_report");
}

TEST_CASE("run_calibrate writes a result that parses back") {
  Rng rng(86);
  const auto script = testsup::make_scripted_capture(rng, 0.4);
  const auto dir = temp_dir("hmdtrack_calib");
  const std::string capture_path = (dir / "capture.txt").string();
  const std::string out_path = (dir / "calib.txt").string();
  save_capture(script.capture, capture_path);
  const CalibrationResult result = run_calibrate(capture_path, out_path);
  const CalibrationResult loaded = load_calibration(out_path);
  CHECK(loaded.assignment == result.assignment);
  CHECK(loaded.assignment.at(1) == SensorRole::kLeftLeg);
}

TEST_CASE("cli binary: synth -> eval bypass round trip") {
  Fixture fx;
  const auto dir = temp_dir("hmdtrack_cli");
  const std::string data_dir = (dir / "data").string();
  const std::string report = (dir / "report.json").string();
  std::string cmd = std::string(HMDTRACK_BIN) + " synth --scenario hmd2imus " +
                    "--out " + data_dir + " " + fx.motion2 + " > /dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  cmd = std::string(HMDTRACK_BIN) + " eval --bypass-oracle --out " + report +
        " " + data_dir + "/m2.dataset > /dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(report));
  validate_eval_report(j);
  CHECK(j.at("aggregate").at("mpjpe_cm").get<double>() == 0.0);

  // missing input file -> every sequence fails -> exit code 3
  cmd = std::string(HMDTRACK_BIN) + " eval --bypass-oracle " + data_dir +
        "/missing.dataset 2> /dev/null > /dev/null";
  const int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 3);

  // neither weights nor bypass -> input error -> exit code 2
  cmd = std::string(HMDTRACK_BIN) + " eval " + data_dir +
        "/m2.dataset 2> /dev/null > /dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
}

TEST_CASE("cli binary: calibrate exit codes") {
  Rng rng(87);
  const auto dir = temp_dir("hmdtrack_cli2");
  // all-moving capture: no still segment -> exit 4
  RawCapture capture;
  for (int i = 0; i < 600; ++i)
    for (int s = 0; s < 3; ++s) {
      RawImuSample sample;
      sample.sensor_id = s;
      sample.timestamp = i / 60.0;
      sample.rotation = axis_angle_to_matrix({0, 1, 0}, 1.5 * i / 60.0 + s);
      capture.samples.push_back(sample);
    }
  const std::string path = (dir / "moving.txt").string();
  save_capture(capture, path);
  const std::string cmd = std::string(HMDTRACK_BIN) + " calibrate " + path +
                          " 2> /dev/null > /dev/null";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 4);
}
