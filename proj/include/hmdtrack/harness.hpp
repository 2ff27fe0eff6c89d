// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hmdtrack/dataset.hpp"
#include "hmdtrack/file_formats.hpp"
#include "hmdtrack/losses.hpp"
#include "hmdtrack/metrics.hpp"
#include "hmdtrack/network.hpp"
#include "hmdtrack/weights_io.hpp"

namespace hmdtrack {

struct RunConfig {
  Scenario scenario = Scenario::make(ScenarioTag::kHmd);
  std::string weights_path;
  std::string skeleton_path; // empty -> bundled default
  std::vector<std::string> dataset_paths;
  double fps = 60.0;
  int clip_length = 40;
  bool reset_between_clips = false;
  std::uint64_t seed = 0;
  std::string report_path;
  std::optional<double> ema_beta_smoothing;
  bool bypass_oracle = false;
  int bench_warmup_steps = 1000;
  int bench_steps = 10000;

  void validate() const {
    if (clip_length < 1) throw DimensionError("clip length must be >= 1");
    if (fps <= 0.0) throw UnsupportedRate("fps must be positive");
    if (ema_beta_smoothing &&
        (*ema_beta_smoothing < 0.0 || *ema_beta_smoothing >= 1.0))
      throw DimensionError("ema factor must be in [0, 1)");
  }
};

inline Skeleton load_skeleton_or_default(const std::string& path) {
  return path.empty() ? default_skeleton() : load_skeleton(path);
}

inline int worker_count() {
  if (const char* env = std::getenv("HMDTRACK_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

namespace detail {

inline std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
  nlohmann::json j{{"scenario", scenario_name(cfg.scenario.tag)},
                   {"weights", cfg.weights_path},
                   {"skeleton", cfg.skeleton_path.empty() ? "<bundled>"
                                                          : cfg.skeleton_path},
                   {"datasets", cfg.dataset_paths},
                   {"fps", cfg.fps},
                   {"clip_length", cfg.clip_length},
                   {"reset_between_clips", cfg.reset_between_clips},
                   {"seed", cfg.seed},
                   {"bypass_oracle", cfg.bypass_oracle}};
  j["ema_beta_smoothing"] = cfg.ema_beta_smoothing
                                ? nlohmann::json(*cfg.ema_beta_smoothing)
                                : nlohmann::json(nullptr);
  return j;
}

} // namespace detail

// ---------------------------------------------------------------------------
// synth: motion files -> paired evaluation datasets

struct SynthResult {
  std::vector<std::string> outputs;
};

inline SynthResult run_synth(const std::vector<std::string>& motion_paths,
                             const Scenario& scenario, double fps,
                             const std::string& out_dir,
                             const std::string& skeleton_path = {}) {
  if (motion_paths.empty()) throw EmptyInput("no motion files given");
  const Skeleton skel = load_skeleton_or_default(skeleton_path);
  std::filesystem::create_directories(out_dir);
  SynthResult result;
  for (const std::string& path : motion_paths) {
    const Motion motion = load_motion(path);
    const Dataset d = synthesize_dataset(motion, skel, scenario, fps);
    const std::string out =
        (std::filesystem::path(out_dir) /
         (std::filesystem::path(path).stem().string() + ".dataset"))
            .string();
    save_dataset(d, out);
    result.outputs.push_back(out);
  }
  return result;
}

// ---------------------------------------------------------------------------
// eval: stream datasets through the tracker and score them

struct SequenceEval {
  std::string path;
  std::size_t frames = 0;
  std::optional<MetricReport> report;
  std::string error; // empty on success
};

struct EvalResult {
  std::vector<SequenceEval> sequences;
  std::optional<MetricReport> aggregate;
  nlohmann::json report_json;
};

inline std::vector<PoseOutput> stream_dataset(const Dataset& d,
                                              const NetworkWeights& weights,
                                              const Skeleton& skel,
                                              const RunConfig& cfg) {
  StreamState state = StreamState::make(weights.config);
  std::vector<PoseOutput> outs;
  outs.reserve(d.inputs.size());
  std::array<double, kNumShapeCoeffs> ema{};
  bool ema_started = false;
  for (std::size_t t = 0; t < d.inputs.size(); ++t) {
    if (cfg.reset_between_clips && t % static_cast<std::size_t>(cfg.clip_length) == 0)
      reset_state(state);
    PoseOutput out = forward_step(state, d.inputs[t], weights, skel);
    if (cfg.ema_beta_smoothing) {
      const double a = *cfg.ema_beta_smoothing;
      for (int i = 0; i < kNumShapeCoeffs; ++i)
        ema[i] = ema_started ? a * ema[i] + (1.0 - a) * out.beta[i]
                             : out.beta[i];
      ema_started = true;
      out.beta = ema;
      const Vec3 head{static_cast<double>(d.inputs[t].x[0]),
                      static_cast<double>(d.inputs[t].x[1]),
                      static_cast<double>(d.inputs[t].x[2])};
      const Vec3 trans = anchor_root_from_head(skel, out.beta, out.theta, head);
      out.body = forward_kinematics(skel, out.beta, out.theta, trans);
    }
    outs.push_back(std::move(out));
  }
  return outs;
}

inline EvalResult run_eval(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.dataset_paths.empty()) throw EmptyInput("no datasets given");
  const Skeleton skel = load_skeleton_or_default(cfg.skeleton_path);
  std::optional<NetworkWeights> weights;
  std::uint64_t checksum = 0;
  if (!cfg.bypass_oracle) {
    if (cfg.weights_path.empty())
      throw MissingStream("eval requires --weights (or --bypass-oracle)");
    weights = load_weights(cfg.weights_path);
    checksum = weights_checksum(*weights);
  }

  EvalResult result;
  result.sequences.resize(cfg.dataset_paths.size());

  auto eval_one = [&](std::size_t idx) {
    SequenceEval& se = result.sequences[idx];
    se.path = cfg.dataset_paths[idx];
    try {
      const Dataset d = load_dataset(se.path);
      se.frames = d.inputs.size();
      JointTrack pred;
      if (cfg.bypass_oracle) {
        pred = track_from_motion(d.gt, skel);
      } else {
        pred = track_from_outputs(stream_dataset(d, *weights, skel, cfg));
      }
      se.report = metrics(pred, track_from_motion(d.gt, skel),
                          skel.joint_sets, d.fps);
    } catch (const Error& e) {
      se.error = e.what();
    }
  };

  const int workers =
      std::min<int>(worker_count(), static_cast<int>(cfg.dataset_paths.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.dataset_paths.size(); ++i) eval_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cfg.dataset_paths.size();
             i = next.fetch_add(1))
          eval_one(i);
      });
    for (std::thread& t : pool) t.join();
  }

  std::vector<MetricReport> reports;
  std::vector<std::size_t> frames;
  for (const SequenceEval& se : result.sequences)
    if (se.report) {
      reports.push_back(*se.report);
      frames.push_back(se.frames);
    }
  if (!reports.empty())
    result.aggregate = aggregate_reports(reports, frames);

  nlohmann::json per_seq = nlohmann::json::array();
  for (const SequenceEval& se : result.sequences) {
    nlohmann::json j{{"path", se.path}, {"frames", se.frames}};
    if (se.report) j["metrics"] = metric_report_to_json(*se.report);
    if (!se.error.empty()) j["error"] = se.error;
    per_seq.push_back(j);
  }
  result.report_json = {
      {"kind", "eval_report"},
      {"format_version", 1},
      {"config", detail::config_echo(cfg)},
      {"weights_checksum", checksum},
      {"mpjre_convention", kMpjreConvention},
      {"sequences", per_seq},
      {"aggregate", result.aggregate
                        ? metric_report_to_json(*result.aggregate)
                        : nlohmann::json(nullptr)},
      {"timestamp", detail::iso_timestamp()}};
  if (!cfg.report_path.empty()) {
    std::ofstream out(cfg.report_path);
    if (!out)
      throw ParseError("cannot open '" + cfg.report_path + "' for writing");
    out << result.report_json.dump(2) << "\n";
  }
  return result;
}

// Schema check used by tests and by consumers of report files.
inline void validate_eval_report(const nlohmann::json& j) {
  for (const char* key : {"kind", "format_version", "config",
                          "weights_checksum", "mpjre_convention", "sequences",
                          "aggregate", "timestamp"})
    if (!j.contains(key))
      throw ParseError(std::string("report missing key '") + key + "'");
  if (j.at("kind") != "eval_report") throw ParseError("not an eval report");
  for (const auto& seq : j.at("sequences")) {
    if (!seq.contains("path") || !seq.contains("frames"))
      throw ParseError("sequence entry missing path/frames");
    if (seq.contains("metrics"))
      for (const char* key : {"mpjre_deg", "mpjpe_cm", "mpjve_cm_s",
                              "jitter_1e2_m_s3", "h_pe_cm", "u_pe_cm",
                              "l_pe_cm", "r_pe_cm", "mpjre_convention"})
        if (!seq.at("metrics").contains(key))
          throw ParseError(std::string("metrics missing key '") + key + "'");
  }
}

// ---------------------------------------------------------------------------
// bench: single-stream forward-step latency

struct BenchReport {
  double steps_per_s = 0.0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p99_ms = 0.0;
  double first100_mean_ms = 0.0;
  double last100_mean_ms = 0.0;
  double first_half_steps_per_s = 0.0;
  StepTimings stage_totals;
  int steps = 0;
  nlohmann::json to_json() const {
    return {{"kind", "bench_report"},
            {"steps", steps},
            {"steps_per_s", steps_per_s},
            {"mean_ms", mean_ms},
            {"median_ms", median_ms},
            {"p99_ms", p99_ms},
            {"first100_mean_ms", first100_mean_ms},
            {"last100_mean_ms", last100_mean_ms},
            {"first_half_steps_per_s", first_half_steps_per_s},
            {"stage_ms_per_step",
             {{"embed", stage_totals.embed_s / steps * 1e3},
              {"recurrent", stage_totals.recurrent_s / steps * 1e3},
              {"attention", stage_totals.attention_s / steps * 1e3},
              {"heads", stage_totals.heads_s / steps * 1e3},
              {"fk", stage_totals.fk_s / steps * 1e3}}}};
  }
};

// Deterministic smooth synthetic motion used by the benchmark and tests.
inline Motion make_synthetic_motion(std::uint64_t seed, std::size_t frames,
                                    double fps) {
  Rng rng(seed);
  Motion m;
  m.fps = fps;
  for (double& b : m.shape) b = rng.uniform(-2.0, 2.0);
  struct JointWave {
    Vec3 axis;
    double amp, freq, phase;
  };
  std::array<JointWave, kNumJoints> waves;
  for (JointWave& w : waves) {
    const Mat3 r = random_rotation(rng);
    w.axis = r.column(0);
    w.amp = rng.uniform(0.05, 0.45);
    w.freq = rng.uniform(0.2, 1.2);
    w.phase = rng.uniform(0.0, 6.28318530717958648);
  }
  m.frames.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double ts = static_cast<double>(t) / fps;
    MotionFrame& f = m.frames[t];
    f.root_translation = {0.4 * std::sin(0.7 * ts), 0.95 + 0.04 * std::sin(1.3 * ts),
                          0.4 * std::cos(0.5 * ts)};
    for (int j = 0; j < kNumJoints; ++j) {
      const JointWave& w = waves[j];
      const double angle = w.amp * std::sin(2.0 * 3.14159265358979323846 *
                                                w.freq * ts +
                                            w.phase);
      f.pose[j] = matrix_to_rot6d(axis_angle_to_matrix(w.axis, angle));
    }
  }
  return m;
}

inline BenchReport run_bench(const RunConfig& cfg) {
  cfg.validate();
  const Skeleton skel = load_skeleton_or_default(cfg.skeleton_path);
  NetworkWeights weights = cfg.weights_path.empty()
                               ? init_weights(ModelConfig{}, cfg.seed)
                               : load_weights(cfg.weights_path);

  // A looped synthetic clip drives the step; inputs vary frame to frame.
  const Motion motion = make_synthetic_motion(cfg.seed + 1, 600, cfg.fps);
  const Dataset data = synthesize_dataset(motion, skel, cfg.scenario, cfg.fps);

  StreamState state = StreamState::make(weights.config);
  for (int i = 0; i < cfg.bench_warmup_steps; ++i)
    forward_step(state, data.inputs[i % data.inputs.size()], weights, skel);

  BenchReport r;
  r.steps = cfg.bench_steps;
  std::vector<double> step_s(cfg.bench_steps);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < cfg.bench_steps; ++i) {
    const auto a = std::chrono::steady_clock::now();
    forward_step(state, data.inputs[i % data.inputs.size()], weights, skel,
                 &r.stage_totals);
    const auto b = std::chrono::steady_clock::now();
    step_s[i] = std::chrono::duration<double>(b - a).count();
  }
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  r.steps_per_s = cfg.bench_steps / total;
  const int half = std::max(1, cfg.bench_steps / 2);
  double first_half = 0.0;
  for (int i = 0; i < half; ++i) first_half += step_s[i];
  r.first_half_steps_per_s = half / first_half;
  double mean = 0.0;
  for (double s : step_s) mean += s;
  r.mean_ms = mean / cfg.bench_steps * 1e3;
  const int w = std::min(100, cfg.bench_steps);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < w; ++i) {
    first += step_s[i];
    last += step_s[cfg.bench_steps - 1 - i];
  }
  r.first100_mean_ms = first / w * 1e3;
  r.last100_mean_ms = last / w * 1e3;
  std::sort(step_s.begin(), step_s.end());
  r.median_ms = step_s[cfg.bench_steps / 2] * 1e3;
  r.p99_ms = step_s[static_cast<std::size_t>(cfg.bench_steps * 0.99)] * 1e3;

  if (!cfg.report_path.empty()) {
    std::ofstream out(cfg.report_path);
    if (!out)
      throw ParseError("cannot open '" + cfg.report_path + "' for writing");
    out << r.to_json().dump(2) << "\n";
  }
  return r;
}

// ---------------------------------------------------------------------------
// calibrate / init-weights

inline CalibrationResult run_calibrate(const std::string& capture_path,
                                       const std::string& out_path) {
  const RawCapture capture = load_capture(capture_path);
  const CalibrationResult result = calibrate(capture);
  if (!out_path.empty()) save_calibration(result, out_path);
  return result;
}

inline void run_init_weights(const ModelConfig& config, std::uint64_t seed,
                             const std::string& out_path) {
  const NetworkWeights w = init_weights(config, seed);
  save_weights(w, out_path);
}

} // namespace hmdtrack
