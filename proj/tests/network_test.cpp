// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <thread>
#include <vector>

#include "hmdtrack/dataset.hpp"
#include "hmdtrack/harness.hpp"
#include "hmdtrack/network.hpp"
#include "test_support.hpp"

using namespace hmdtrack;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.d_model = 32;
  c.feedforward_dim = 32;
  c.head_hidden = 32;
  c.attention_heads = 4;
  return c;
}

// Arbitrary (non-orthogonal) weights; the structural properties must hold
// for any parameter values.
NetworkWeights random_weights(const ModelConfig& cfg, std::uint64_t seed) {
  NetworkWeights w = make_weights(cfg);
  Rng rng(seed);
  for_each_parameter(w, [&](const std::string&, std::vector<float>& v,
                            const std::vector<int>&) {
    for (float& x : v) x = static_cast<float>(rng.uniform(-0.25, 0.25));
  });
  return w;
}

FrameInput random_input(Rng& rng, const Scenario& scenario) {
  FrameInput f;
  f.mask = scenario.present;
  for (int c = 0; c < kNumComponents; ++c) {
    if (!scenario.present[c]) continue;
    for (int i = component_offset(c); i < component_offset(c + 1); ++i)
      f.x[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
  }
  return f;
}

bool outputs_identical(const PoseOutput& a, const PoseOutput& b) {
  if (std::memcmp(a.theta_raw.data(), b.theta_raw.data(),
                  sizeof(a.theta_raw)) != 0)
    return false;
  if (std::memcmp(a.beta_raw.data(), b.beta_raw.data(), sizeof(a.beta_raw)) !=
      0)
    return false;
  for (int j = 0; j < kNumJoints; ++j)
    for (int c = 0; c < 3; ++c)
      if (a.body.joint_pos[j][c] != b.body.joint_pos[j][c]) return false;
  return true;
}

} // namespace

TEST_CASE("model config invariants") {
  CHECK_NOTHROW(ModelConfig{}.validate());
  ModelConfig bad;
  bad.d_model = 250; // not divisible by 8 heads
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad = ModelConfig{};
  bad.pose_out = 96;
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  bad = ModelConfig{};
  bad.n_blocks = 0;
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_CASE("quantity slices cover each component and sum to d_model") {
  for (int comp = 0; comp < kNumComponents; ++comp) {
    const auto slices = quantity_slices(comp, 256);
    int in_total = 0, out_total = 0, cursor = 0;
    for (const auto& s : slices) {
      CHECK(s.offset == cursor);
      cursor += s.in;
      in_total += s.in;
      out_total += s.out;
    }
    CHECK(in_total == component_dim(comp));
    CHECK(out_total == 256);
  }
}

TEST_CASE("init_weights is deterministic and differs across seeds") {
  const ModelConfig cfg = small_config();
  NetworkWeights a = init_weights(cfg, 5);
  NetworkWeights b = init_weights(cfg, 5);
  NetworkWeights c = init_weights(cfg, 6);

  bool identical = true, differs = false;
  std::vector<std::vector<float>*> bv, cv;
  for_each_parameter(b, [&](const std::string&, std::vector<float>& v,
                            const std::vector<int>&) { bv.push_back(&v); });
  for_each_parameter(c, [&](const std::string&, std::vector<float>& v,
                            const std::vector<int>&) { cv.push_back(&v); });
  std::size_t idx = 0;
  for_each_parameter(a, [&](const std::string&, std::vector<float>& v,
                            const std::vector<int>&) {
    if (*bv[idx] != v) identical = false;
    if (*cv[idx] != v) differs = true;
    ++idx;
  });
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("init_weights makes recurrent matrices orthogonal") {
  const ModelConfig cfg = small_config();
  NetworkWeights w = init_weights(cfg, 7);
  const int n = cfg.d_model;
  for (const TsflBlock& block : w.blocks)
    for (const LstmCell& cell : block.cells)
      for (const LstmGate& gate : cell.gates)
        for (const std::vector<float>* m : {&gate.wh, &gate.wx}) {
          double worst = 0.0;
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              double dot = 0.0;
              for (int k = 0; k < n; ++k)
                dot += static_cast<double>((*m)[k * n + i]) *
                       static_cast<double>((*m)[k * n + j]);
              worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
          CHECK(worst <= 1e-5);
        }
}

TEST_CASE("embed: shape, affine-at-zero, and per-component independence") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = random_weights(cfg, 8);
  Rng rng(9);

  for (auto tag : {ScenarioTag::kHmd, ScenarioTag::kHmd2Imus,
                   ScenarioTag::kHmd3Imus}) {
    const FrameInput f = random_input(rng, Scenario::make(tag));
    CHECK(embed(f, w).size() ==
          static_cast<std::size_t>(cfg.n_components) * cfg.d_model);
  }

  // zero input component: token = LeakyReLU(bias) concatenation + position
  // embedding
  FrameInput zero;
  zero.mask.fill(true);
  const auto tokens = embed(zero, w);
  for (int comp = 0; comp < cfg.n_components; ++comp) {
    const auto slices = quantity_slices(comp, cfg.d_model);
    int cursor = 0;
    for (std::size_t qi = 0; qi < slices.size(); ++qi) {
      for (int i = 0; i < slices[qi].out; ++i) {
        const float expect =
            leaky_relu(w.embedding[comp][qi].b[i], cfg.leaky_slope) +
            w.position_embedding[static_cast<std::size_t>(comp) * cfg.d_model +
                                 cursor + i];
        CHECK(tokens[static_cast<std::size_t>(comp) * cfg.d_model + cursor + i] ==
              expect);
      }
      cursor += slices[qi].out;
    }
  }

  // perturbing an absent component's slots changes only that token
  FrameInput a = random_input(rng, Scenario::make(ScenarioTag::kHmd));
  FrameInput b = a;
  for (int i = component_offset(kPelvisImu); i < component_offset(kPelvisImu + 1);
       ++i)
    b.x[i] = 1.25f;
  const auto ta = embed(a, w);
  const auto tb = embed(b, w);
  for (int comp = 0; comp < cfg.n_components; ++comp) {
    if (comp == kPelvisImu) continue;
    for (int i = 0; i < cfg.d_model; ++i)
      CHECK(ta[static_cast<std::size_t>(comp) * cfg.d_model + i] ==
            tb[static_cast<std::size_t>(comp) * cfg.d_model + i]);
  }
}

TEST_CASE("recurrent_step: zeros, scalar hand trace, fixed point") {
  // zero weights, zero state -> output 0
  LstmCell zero_cell;
  zero_cell.resize(4, 4);
  std::vector<float> x(4, 0.7f), h(4, 0.0f), c(4, 0.0f);
  recurrent_step(zero_cell, x.data(), h.data(), c.data());
  for (float v : h) CHECK(v == 0.0f);
  for (float v : c) CHECK(v == 0.0f);

  // single-unit cell, hand-computed two-step trace
  LstmCell cell;
  cell.resize(1, 1);
  const float wxi = 0.5f, whi = -0.3f, bi = 0.1f;
  const float wxf = 0.2f, whf = 0.4f, bf = -0.2f;
  const float wxg = 0.8f, whg = 0.1f, bg = 0.05f;
  const float wxo = -0.6f, who = 0.7f, bo = 0.3f;
  cell.gates[0] = {{wxi}, {whi}, {bi}};
  cell.gates[1] = {{wxf}, {whf}, {bf}};
  cell.gates[2] = {{wxg}, {whg}, {bg}};
  cell.gates[3] = {{wxo}, {who}, {bo}};
  float hs = 0.0f, cs = 0.0f;
  const float inputs[2] = {0.9f, -0.4f};
  double hh = 0.0, cc = 0.0;
  for (float in : inputs) {
    recurrent_step(cell, &in, &hs, &cs);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double i = sig(wxi * in + whi * hh + bi);
    const double f = sig(wxf * in + whf * hh + bf);
    const double g = std::tanh(wxg * in + whg * hh + bg);
    const double o = sig(wxo * in + who * hh + bo);
    cc = f * cc + i * g;
    hh = o * std::tanh(cc);
    CHECK(std::abs(hs - hh) <= 1e-6);
    CHECK(std::abs(cs - cc) <= 1e-6);
  }

  // contractive weights reach a fixed point under a constant input
  Rng rng(10);
  LstmCell contractive;
  contractive.resize(8, 8);
  for (LstmGate& g : contractive.gates) {
    for (float& v : g.wx) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (float& v : g.wh) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (float& v : g.b) v = static_cast<float>(rng.uniform(-0.1, 0.1));
  }
  std::vector<float> in(8);
  for (float& v : in) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<float> hf(8, 0.0f), cf(8, 0.0f);
  for (int step = 0; step < 200; ++step)
    recurrent_step(contractive, in.data(), hf.data(), cf.data());
  std::vector<float> h_prev = hf;
  recurrent_step(contractive, in.data(), hf.data(), cf.data());
  for (int i = 0; i < 8; ++i) CHECK(std::abs(hf[i] - h_prev[i]) <= 1e-5);
}

TEST_CASE("attention_encode: single present token reduces to its own pipeline") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = random_weights(cfg, 11);
  const AttentionLayer& layer = w.blocks[0].encoder[0];
  const int d = cfg.d_model;

  Rng rng(12);
  std::vector<float> tokens(static_cast<std::size_t>(cfg.n_components) * d);
  for (float& v : tokens) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::array<bool, kNumComponents> mask{};
  mask[kHead] = true;

  // expected: softmax over one element is 1, so attention output is V(x)
  std::vector<float> x(tokens.begin(), tokens.begin() + d);
  std::vector<float> v(d), proj(d);
  layer.wv.apply(x.data(), v.data());
  layer.wo.apply(v.data(), proj.data());
  std::vector<float> expect = x;
  for (int i = 0; i < d; ++i) expect[i] += proj[i];
  // layer norm 1
  auto ln = [&](std::vector<float>& t, const std::vector<float>& gamma,
                const std::vector<float>& beta) {
    float mean = 0.0f;
    for (float u : t) mean += u;
    mean /= d;
    float var = 0.0f;
    for (float u : t) var += (u - mean) * (u - mean);
    var /= d;
    const float inv = 1.0f / std::sqrt(var + 1e-5f);
    for (int i = 0; i < d; ++i) t[i] = (t[i] - mean) * inv * gamma[i] + beta[i];
  };
  ln(expect, layer.ln1_gamma, layer.ln1_beta);
  std::vector<float> mid(cfg.feedforward_dim), ffo(d);
  layer.ff1.apply(expect.data(), mid.data());
  for (float& u : mid) u = leaky_relu(u, cfg.leaky_slope);
  layer.ff2.apply(mid.data(), ffo.data());
  for (int i = 0; i < d; ++i) expect[i] += ffo[i];
  ln(expect, layer.ln2_gamma, layer.ln2_beta);

  attention_encode(tokens, mask, layer, cfg);
  for (int i = 0; i < d; ++i)
    CHECK(std::abs(tokens[i] - expect[i]) <= 2e-6);
}

TEST_CASE("attention_encode: zero value projection leaves the norm/ff path") {
  const ModelConfig cfg = small_config();
  NetworkWeights w = random_weights(cfg, 13);
  AttentionLayer layer = w.blocks[0].encoder[0];
  std::fill(layer.wv.w.begin(), layer.wv.w.end(), 0.0f);
  std::fill(layer.wv.b.begin(), layer.wv.b.end(), 0.0f);
  std::fill(layer.wo.b.begin(), layer.wo.b.end(), 0.0f);
  const int d = cfg.d_model;

  Rng rng(14);
  std::vector<float> tokens(static_cast<std::size_t>(cfg.n_components) * d);
  for (float& v : tokens) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::array<bool, kNumComponents> mask;
  mask.fill(true);

  std::vector<float> expect = tokens;
  for (int t = 0; t < cfg.n_components; ++t) {
    std::vector<float> tok(expect.begin() + static_cast<std::size_t>(t) * d,
                           expect.begin() + static_cast<std::size_t>(t + 1) * d);
    auto ln = [&](std::vector<float>& u, const std::vector<float>& gamma,
                  const std::vector<float>& beta) {
      float mean = 0.0f;
      for (float q : u) mean += q;
      mean /= d;
      float var = 0.0f;
      for (float q : u) var += (q - mean) * (q - mean);
      var /= d;
      const float inv = 1.0f / std::sqrt(var + 1e-5f);
      for (int i = 0; i < d; ++i) u[i] = (u[i] - mean) * inv * gamma[i] + beta[i];
    };
    ln(tok, layer.ln1_gamma, layer.ln1_beta);
    std::vector<float> mid(cfg.feedforward_dim), ffo(d);
    layer.ff1.apply(tok.data(), mid.data());
    for (float& u : mid) u = leaky_relu(u, cfg.leaky_slope);
    layer.ff2.apply(mid.data(), ffo.data());
    for (int i = 0; i < d; ++i) tok[i] += ffo[i];
    ln(tok, layer.ln2_gamma, layer.ln2_beta);
    std::copy(tok.begin(), tok.end(),
              expect.begin() + static_cast<std::size_t>(t) * d);
  }

  attention_encode(tokens, mask, layer, cfg);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    CHECK(std::abs(tokens[i] - expect[i]) <= 2e-6);
}

TEST_CASE("attention_encode: present tokens ignore absent tokens bit-exactly") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = random_weights(cfg, 15);
  const AttentionLayer& layer = w.blocks[1].encoder[2];
  const int d = cfg.d_model;
  Rng rng(16);

  std::array<bool, kNumComponents> mask = {true, true, true, false,
                                           false, false, true, true};
  std::vector<float> a(static_cast<std::size_t>(cfg.n_components) * d);
  for (float& v : a) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<float> b = a;
  for (int comp : {kPelvisImu, kLeftLegImu, kRightLegImu})
    for (int i = 0; i < d; ++i)
      b[static_cast<std::size_t>(comp) * d + i] =
          static_cast<float>(rng.uniform(-5.0, 5.0));

  attention_encode(a, mask, layer, cfg);
  attention_encode(b, mask, layer, cfg);
  for (int comp = 0; comp < cfg.n_components; ++comp) {
    if (!mask[comp]) continue;
    for (int i = 0; i < d; ++i)
      CHECK(a[static_cast<std::size_t>(comp) * d + i] ==
            b[static_cast<std::size_t>(comp) * d + i]);
  }

  std::array<bool, kNumComponents> none{};
  CHECK_THROWS_AS(attention_encode(a, none, layer, cfg), AllMasked);
}

TEST_CASE("forward_step: output dims, determinism, and anchoring closure") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 17);
  const Skeleton skel = default_skeleton();
  Rng rng(18);

  for (auto tag : {ScenarioTag::kHmd, ScenarioTag::kHmd2Imus,
                   ScenarioTag::kHmd3Imus}) {
    StreamState s1 = StreamState::make(cfg);
    StreamState s2 = StreamState::make(cfg);
    const FrameInput f = random_input(rng, Scenario::make(tag));
    const PoseOutput o1 = forward_step(s1, f, w, skel);
    const PoseOutput o2 = forward_step(s2, f, w, skel);
    CHECK(o1.theta_raw.size() == 132);
    CHECK(o1.beta_raw.size() == 16);
    CHECK(outputs_identical(o1, o2));

    // the head joint lands on the requested head position
    const Vec3 head{static_cast<double>(f.x[0]), static_cast<double>(f.x[1]),
                    static_cast<double>(f.x[2])};
    CHECK(norm(o1.body.joint_pos[kHeadJoint] - head) <= 1e-6);
  }
}

TEST_CASE("forward_step rejects a mismatched stream state") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 19);
  StreamState wrong = StreamState::make(ModelConfig{});
  Rng rng(20);
  const FrameInput f = random_input(rng, Scenario::make(ScenarioTag::kHmd));
  CHECK_THROWS_AS(forward_step(wrong, f, w, default_skeleton()),
                  DimensionError);
}

TEST_CASE("forward_clip equals manual streaming and is causal") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 21);
  const Skeleton skel = default_skeleton();
  Rng rng(22);

  std::vector<FrameInput> seq;
  const Scenario sc = Scenario::make(ScenarioTag::kHmd2Imus);
  for (int t = 0; t < 40; ++t) {
    FrameInput f = random_input(rng, sc);
    f.frame_index = t;
    seq.push_back(f);
  }

  const auto clip = forward_clip(w, seq, skel);
  StreamState state = StreamState::make(cfg);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const PoseOutput step = forward_step(state, seq[t], w, skel);
    CHECK(outputs_identical(clip[t], step));
  }

  // causality: a prefix yields the prefix of the outputs
  const std::vector<FrameInput> prefix(seq.begin(), seq.begin() + 17);
  const auto clip_prefix = forward_clip(w, prefix, skel);
  for (std::size_t t = 0; t < prefix.size(); ++t)
    CHECK(outputs_identical(clip_prefix[t], clip[t]));

  CHECK_THROWS_AS(forward_clip(w, {}, skel), EmptyInput);
}

TEST_CASE("reset_state restores the cold-start behavior bit-exactly") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 23);
  const Skeleton skel = default_skeleton();
  Rng rng(24);
  const Scenario sc = Scenario::make(ScenarioTag::kHmd);

  std::vector<FrameInput> clip1, clip2;
  for (int t = 0; t < 12; ++t) clip1.push_back(random_input(rng, sc));
  for (int t = 0; t < 12; ++t) clip2.push_back(random_input(rng, sc));

  StreamState state = StreamState::make(cfg);
  for (const FrameInput& f : clip1) forward_step(state, f, w, skel);
  reset_state(state);
  CHECK(state.frame_counter == 0);
  std::vector<PoseOutput> after_reset;
  for (const FrameInput& f : clip2)
    after_reset.push_back(forward_step(state, f, w, skel));

  // fresh state gives the same outputs: prior clips do not leak through
  const auto fresh = forward_clip(w, clip2, skel);
  for (std::size_t t = 0; t < clip2.size(); ++t)
    CHECK(outputs_identical(after_reset[t], fresh[t]));

  reset_state(state);
  StreamState twice = state;
  reset_state(twice);
  CHECK(state.h == twice.h);
  CHECK(state.c == twice.c);
}

TEST_CASE("mask invariance holds end to end for random weights") {
  const ModelConfig cfg = small_config();
  const Skeleton skel = default_skeleton();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const NetworkWeights w = random_weights(cfg, 100 + seed);
    Rng rng(200 + seed);
    const Scenario sc = Scenario::make(ScenarioTag::kHmd);

    std::vector<FrameInput> a, b;
    for (int t = 0; t < 6; ++t) {
      FrameInput f = random_input(rng, sc);
      a.push_back(f);
      // corrupt the absent components in the paired stream
      for (int comp : {kPelvisImu, kLeftLegImu, kRightLegImu})
        for (int i = component_offset(comp); i < component_offset(comp + 1); ++i)
          f.x[i] = static_cast<float>(rng.uniform(-9.0, 9.0));
      b.push_back(f);
    }
    const auto oa = forward_clip(w, a, skel);
    const auto ob = forward_clip(w, b, skel);
    for (std::size_t t = 0; t < oa.size(); ++t)
      CHECK(outputs_identical(oa[t], ob[t]));
  }
}

TEST_CASE("independent streams on separate threads match serial execution") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 27); // shared, read-only
  const Skeleton skel = default_skeleton();

  std::vector<std::vector<FrameInput>> streams;
  for (int s = 0; s < 4; ++s) {
    Rng rng(300 + s);
    std::vector<FrameInput> seq;
    const Scenario sc = Scenario::make(s % 2 == 0 ? ScenarioTag::kHmd
                                                  : ScenarioTag::kHmd3Imus);
    for (int t = 0; t < 15; ++t) seq.push_back(random_input(rng, sc));
    streams.push_back(std::move(seq));
  }

  std::vector<std::vector<PoseOutput>> serial;
  for (const auto& seq : streams) serial.push_back(forward_clip(w, seq, skel));

  std::vector<std::vector<PoseOutput>> threaded(streams.size());
  std::vector<std::thread> pool;
  for (std::size_t s = 0; s < streams.size(); ++s)
    pool.emplace_back([&, s] { threaded[s] = forward_clip(w, streams[s], skel); });
  for (std::thread& t : pool) t.join();

  for (std::size_t s = 0; s < streams.size(); ++s)
    for (std::size_t t = 0; t < streams[s].size(); ++t)
      CHECK(outputs_identical(serial[s][t], threaded[s][t]));
}

TEST_CASE("outputs stay finite over long random streams") {
  const ModelConfig cfg = small_config();
  const NetworkWeights w = init_weights(cfg, 25);
  const Skeleton skel = default_skeleton();
  StreamState state = StreamState::make(cfg);
  Rng rng(26);
  const Scenario sc = Scenario::make(ScenarioTag::kHmd3Imus);
  for (int t = 0; t < 2000; ++t) {
    const PoseOutput o = forward_step(state, random_input(rng, sc), w, skel);
    for (float v : o.theta_raw) REQUIRE(std::isfinite(v));
    for (float v : o.beta_raw) REQUIRE(std::isfinite(v));
    for (int j = 0; j < kNumJoints; ++j)
      for (int c = 0; c < 3; ++c) REQUIRE(std::isfinite(o.body.joint_pos[j][c]));
  }
}
