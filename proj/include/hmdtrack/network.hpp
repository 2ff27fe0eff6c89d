// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/linalg.hpp"
#include "hmdtrack/random.hpp"
#include "hmdtrack/sensing.hpp"
#include "hmdtrack/skeleton.hpp"

namespace hmdtrack {

struct ModelConfig {
  int n_blocks = 2;
  int d_model = 256;
  int n_components = kNumComponents;
  int transformer_layers_per_block = 3;
  int attention_heads = 8;
  int feedforward_dim = 256;
  int head_hidden = 256;
  int pose_out = kNumJoints * 6;
  int shape_out = kNumShapeCoeffs;
  float leaky_slope = 0.01f;

  void validate() const {
    if (n_blocks <= 0 || d_model <= 0 || transformer_layers_per_block <= 0 ||
        attention_heads <= 0 || feedforward_dim <= 0 || head_hidden <= 0 ||
        shape_out <= 0)
      throw DimensionError("model dimensions must be positive");
    if (n_components != kNumComponents)
      throw DimensionError("model is defined over the 8 input components");
    if (d_model % attention_heads != 0)
      throw DimensionError("d_model must be divisible by attention_heads");
    if (d_model % 8 != 0)
      throw DimensionError("d_model must be divisible by 8 for the "
                           "per-quantity embedding split");
    if (pose_out != kNumJoints * 6)
      throw DimensionError("pose head must emit 22x6 values");
  }
};

inline float leaky_relu(float x, float slope) { return x > 0.0f ? x : slope * x; }

// Dot product over 16 independent lanes with a fixed combine order: the
// result is deterministic for a given build, and the lanes let the compiler
// vectorize what a strict left-to-right reduction cannot.
inline float dot_f32(const float* a, const float* b, int n) {
  float lane[16] = {};
  int c = 0;
  for (; c + 16 <= n; c += 16)
    for (int k = 0; k < 16; ++k) lane[k] += a[c + k] * b[c + k];
  float tail = 0.0f;
  for (; c < n; ++c) tail += a[c] * b[c];
  float s0 = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  float s1 = (lane[4] + lane[5]) + (lane[6] + lane[7]);
  float s2 = (lane[8] + lane[9]) + (lane[10] + lane[11]);
  float s3 = (lane[12] + lane[13]) + (lane[14] + lane[15]);
  return ((s0 + s1) + (s2 + s3)) + tail;
}

struct Linear {
  int in = 0;
  int out = 0;
  std::vector<float> w; // row-major, out x in
  std::vector<float> b; // out

  void resize(int in_dim, int out_dim) {
    in = in_dim;
    out = out_dim;
    w.assign(static_cast<std::size_t>(in) * out, 0.0f);
    b.assign(out, 0.0f);
  }

  void apply(const float* x, float* y) const {
    for (int r = 0; r < out; ++r)
      y[r] = b[r] + dot_f32(w.data() + static_cast<std::size_t>(r) * in, x, in);
  }
};

// Widths of the per-quantity embedding maps. 18-dim components split d_model
// evenly over position/velocity/rotation/angular-velocity; 15-dim IMU
// components weight the two rotational quantities higher (3/8 + 3/8 + 1/4).
struct QuantitySlice {
  int offset; // within the component block
  int in;
  int out;
};

inline std::vector<QuantitySlice> quantity_slices(int component, int d_model) {
  const int q = d_model / 4;
  const int r = 3 * d_model / 8;
  if (component_dim(component) == 18)
    return {{0, 3, q}, {3, 3, q}, {6, 6, q}, {12, 6, q}};
  return {{0, 6, r}, {6, 6, r}, {12, 3, d_model - 2 * r}};
}

struct LstmGate {
  std::vector<float> wx; // hidden x input
  std::vector<float> wh; // hidden x hidden
  std::vector<float> b;  // hidden
};

// Gate order: input, forget, cell, output.
struct LstmCell {
  int input_dim = 0;
  int hidden_dim = 0;
  std::array<LstmGate, 4> gates;

  void resize(int in_dim, int hid_dim) {
    input_dim = in_dim;
    hidden_dim = hid_dim;
    for (LstmGate& g : gates) {
      g.wx.assign(static_cast<std::size_t>(hid_dim) * in_dim, 0.0f);
      g.wh.assign(static_cast<std::size_t>(hid_dim) * hid_dim, 0.0f);
      g.b.assign(hid_dim, 0.0f);
    }
  }
};

struct AttentionLayer {
  Linear wq, wk, wv, wo;
  Linear ff1, ff2;
  std::vector<float> ln1_gamma, ln1_beta;
  std::vector<float> ln2_gamma, ln2_beta;
};

struct TsflBlock {
  std::vector<LstmCell> cells;          // one per component
  std::vector<AttentionLayer> encoder;  // transformer_layers_per_block
};

struct NetworkWeights {
  ModelConfig config;
  std::vector<std::vector<Linear>> embedding; // [component][quantity]
  std::vector<float> position_embedding;      // n_components x d_model
  std::vector<TsflBlock> blocks;
  Linear pose_head1, pose_head2;
  Linear shape_head1, shape_head2;
};

// Visits every parameter tensor in canonical order with its canonical name
// and shape. Serialization, counting, and initialization all walk this.
template <typename Weights, typename Fn>
void for_each_parameter(Weights& w, Fn&& fn) {
  const ModelConfig& c = w.config;
  auto visit_linear = [&](const std::string& name, auto& l) {
    fn(name + ".weight", l.w, std::vector<int>{l.out, l.in});
    fn(name + ".bias", l.b, std::vector<int>{l.out});
  };
  for (int comp = 0; comp < c.n_components; ++comp) {
    auto slices = quantity_slices(comp, c.d_model);
    for (std::size_t q = 0; q < slices.size(); ++q)
      visit_linear("embed.c" + std::to_string(comp) + ".q" + std::to_string(q),
                   w.embedding[comp][q]);
  }
  fn("token_position_embedding", w.position_embedding,
     std::vector<int>{c.n_components, c.d_model});
  static const char* kGateNames[4] = {"input", "forget", "cell", "output"};
  for (int b = 0; b < c.n_blocks; ++b) {
    const std::string bp = "block" + std::to_string(b);
    for (int comp = 0; comp < c.n_components; ++comp) {
      auto& cell = w.blocks[b].cells[comp];
      const std::string cp = bp + ".lstm.c" + std::to_string(comp);
      for (int g = 0; g < 4; ++g) {
        fn(cp + "." + kGateNames[g] + ".wx", cell.gates[g].wx,
           std::vector<int>{cell.hidden_dim, cell.input_dim});
        fn(cp + "." + kGateNames[g] + ".wh", cell.gates[g].wh,
           std::vector<int>{cell.hidden_dim, cell.hidden_dim});
        fn(cp + "." + kGateNames[g] + ".bias", cell.gates[g].b,
           std::vector<int>{cell.hidden_dim});
      }
    }
    for (int l = 0; l < c.transformer_layers_per_block; ++l) {
      auto& a = w.blocks[b].encoder[l];
      const std::string lp = bp + ".enc" + std::to_string(l);
      visit_linear(lp + ".attn.q", a.wq);
      visit_linear(lp + ".attn.k", a.wk);
      visit_linear(lp + ".attn.v", a.wv);
      visit_linear(lp + ".attn.out", a.wo);
      visit_linear(lp + ".ff1", a.ff1);
      visit_linear(lp + ".ff2", a.ff2);
      fn(lp + ".norm1.gamma", a.ln1_gamma, std::vector<int>{c.d_model});
      fn(lp + ".norm1.beta", a.ln1_beta, std::vector<int>{c.d_model});
      fn(lp + ".norm2.gamma", a.ln2_gamma, std::vector<int>{c.d_model});
      fn(lp + ".norm2.beta", a.ln2_beta, std::vector<int>{c.d_model});
    }
  }
  visit_linear("pose_head.fc1", w.pose_head1);
  visit_linear("pose_head.fc2", w.pose_head2);
  visit_linear("shape_head.fc1", w.shape_head1);
  visit_linear("shape_head.fc2", w.shape_head2);
}

inline std::size_t parameter_count(const NetworkWeights& w) {
  std::size_t n = 0;
  for_each_parameter(w, [&](const std::string&, const std::vector<float>& v,
                            const std::vector<int>&) { n += v.size(); });
  return n;
}

// Allocates all tensors with the shapes implied by the config.
inline NetworkWeights make_weights(const ModelConfig& config) {
  config.validate();
  NetworkWeights w;
  w.config = config;
  w.embedding.resize(config.n_components);
  for (int comp = 0; comp < config.n_components; ++comp) {
    for (const QuantitySlice& s : quantity_slices(comp, config.d_model)) {
      Linear l;
      l.resize(s.in, s.out);
      w.embedding[comp].push_back(l);
    }
  }
  w.position_embedding.assign(
      static_cast<std::size_t>(config.n_components) * config.d_model, 0.0f);
  w.blocks.resize(config.n_blocks);
  for (TsflBlock& b : w.blocks) {
    b.cells.resize(config.n_components);
    for (LstmCell& cell : b.cells) cell.resize(config.d_model, config.d_model);
    b.encoder.resize(config.transformer_layers_per_block);
    for (AttentionLayer& a : b.encoder) {
      a.wq.resize(config.d_model, config.d_model);
      a.wk.resize(config.d_model, config.d_model);
      a.wv.resize(config.d_model, config.d_model);
      a.wo.resize(config.d_model, config.d_model);
      a.ff1.resize(config.d_model, config.feedforward_dim);
      a.ff2.resize(config.feedforward_dim, config.d_model);
      a.ln1_gamma.assign(config.d_model, 1.0f);
      a.ln1_beta.assign(config.d_model, 0.0f);
      a.ln2_gamma.assign(config.d_model, 1.0f);
      a.ln2_beta.assign(config.d_model, 0.0f);
    }
  }
  const int agg = config.n_components * config.d_model;
  w.pose_head1.resize(agg, config.head_hidden);
  w.pose_head2.resize(config.head_hidden, config.pose_out);
  w.shape_head1.resize(agg, config.head_hidden);
  w.shape_head2.resize(config.head_hidden, config.shape_out);
  return w;
}

namespace detail {

inline void fill_uniform(std::vector<float>& v, int fan_in, Rng& rng) {
  const double s = std::sqrt(1.0 / fan_in);
  for (float& x : v) x = static_cast<float>(rng.uniform(-s, s));
}

inline void fill_orthogonal(std::vector<float>& v, int n, Rng& rng) {
  const DMat q = random_orthogonal(n, rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      v[static_cast<std::size_t>(i) * n + j] = static_cast<float>(q(i, j));
}

} // namespace detail

// Deterministic initialization: recurrent weight matrices from QR of seeded
// Gaussians (sign-corrected), everything else uniform in +/- sqrt(1/fan_in),
// normalization at identity, biases at zero.
inline NetworkWeights init_weights(const ModelConfig& config,
                                   std::uint64_t seed) {
  NetworkWeights w = make_weights(config);
  Rng rng(seed);
  for (auto& comp : w.embedding)
    for (Linear& l : comp) {
      detail::fill_uniform(l.w, l.in, rng);
      detail::fill_uniform(l.b, l.in, rng);
    }
  detail::fill_uniform(w.position_embedding, config.d_model, rng);
  for (TsflBlock& b : w.blocks) {
    for (LstmCell& cell : b.cells)
      for (LstmGate& g : cell.gates) {
        detail::fill_orthogonal(g.wx, cell.input_dim, rng);
        detail::fill_orthogonal(g.wh, cell.hidden_dim, rng);
        // biases stay zero
      }
    for (AttentionLayer& a : b.encoder) {
      for (Linear* l : {&a.wq, &a.wk, &a.wv, &a.wo, &a.ff1, &a.ff2}) {
        detail::fill_uniform(l->w, l->in, rng);
        detail::fill_uniform(l->b, l->in, rng);
      }
    }
  }
  for (Linear* l :
       {&w.pose_head1, &w.pose_head2, &w.shape_head1, &w.shape_head2}) {
    detail::fill_uniform(l->w, l->in, rng);
    detail::fill_uniform(l->b, l->in, rng);
  }
  return w;
}

// Persistent recurrent state: one (h, c) pair per block per component.
struct StreamState {
  int n_blocks = 0;
  int n_components = 0;
  int d_model = 0;
  std::vector<float> h; // n_blocks x n_components x d_model
  std::vector<float> c;
  std::int64_t frame_counter = 0;

  static StreamState make(const ModelConfig& cfg) {
    StreamState s;
    s.n_blocks = cfg.n_blocks;
    s.n_components = cfg.n_components;
    s.d_model = cfg.d_model;
    const std::size_t n = static_cast<std::size_t>(cfg.n_blocks) *
                          cfg.n_components * cfg.d_model;
    s.h.assign(n, 0.0f);
    s.c.assign(n, 0.0f);
    return s;
  }

  float* h_at(int block, int comp) {
    return h.data() +
           (static_cast<std::size_t>(block) * n_components + comp) * d_model;
  }
  float* c_at(int block, int comp) {
    return c.data() +
           (static_cast<std::size_t>(block) * n_components + comp) * d_model;
  }
};

inline void reset_state(StreamState& s) {
  std::fill(s.h.begin(), s.h.end(), 0.0f);
  std::fill(s.c.begin(), s.c.end(), 0.0f);
  s.frame_counter = 0;
}

struct PoseOutput {
  std::array<float, kNumJoints * 6> theta_raw{};
  std::array<float, kNumShapeCoeffs> beta_raw{};
  LocalPose theta;
  ShapeParams beta{};
  BodyState body;
};

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// One gated recurrent update. h and c are updated in place; the output is
// the new h.
inline void recurrent_step(const LstmCell& cell, const float* x, float* h,
                           float* c) {
  const int n = cell.hidden_dim;
  std::vector<float> gates(static_cast<std::size_t>(4) * n);
  for (int g = 0; g < 4; ++g) {
    const LstmGate& gate = cell.gates[g];
    float* out = gates.data() + static_cast<std::size_t>(g) * n;
    for (int r = 0; r < n; ++r) {
      const float* wx = gate.wx.data() + static_cast<std::size_t>(r) * cell.input_dim;
      const float* wh = gate.wh.data() + static_cast<std::size_t>(r) * n;
      out[r] = gate.b[r] + dot_f32(wx, x, cell.input_dim) + dot_f32(wh, h, n);
    }
  }
  const float* gi = gates.data();
  const float* gf = gates.data() + n;
  const float* gg = gates.data() + 2 * n;
  const float* go = gates.data() + 3 * n;
  for (int r = 0; r < n; ++r) {
    const float i = sigmoidf(gi[r]);
    const float f = sigmoidf(gf[r]);
    const float g = std::tanh(gg[r]);
    const float o = sigmoidf(go[r]);
    c[r] = f * c[r] + i * g;
    h[r] = o * std::tanh(c[r]);
  }
}

namespace detail {

inline void layer_norm(float* x, const std::vector<float>& gamma,
                       const std::vector<float>& beta, int n) {
  float mean = 0.0f;
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<float>(n);
  float var = 0.0f;
  for (int i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<float>(n);
  const float inv = 1.0f / std::sqrt(var + 1e-5f);
  for (int i = 0; i < n; ++i) x[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

} // namespace detail

// One post-norm encoder layer over the component tokens. Attention toward
// masked-absent tokens is excluded entirely, which keeps present-token
// outputs bit-exactly independent of absent-token values. Absent tokens
// still produce defined outputs (they attend to the present set).
inline void attention_encode(std::vector<float>& tokens,
                             const std::array<bool, kNumComponents>& mask,
                             const AttentionLayer& layer,
                             const ModelConfig& cfg) {
  const int d = cfg.d_model;
  const int n_heads = cfg.attention_heads;
  const int hd = d / n_heads;
  const int m = cfg.n_components;
  int n_present = 0;
  for (bool p : mask) n_present += p ? 1 : 0;
  if (n_present == 0) throw AllMasked("attention over an all-masked frame");

  std::vector<float> q(static_cast<std::size_t>(m) * d);
  std::vector<float> k(static_cast<std::size_t>(m) * d);
  std::vector<float> v(static_cast<std::size_t>(m) * d);
  for (int t = 0; t < m; ++t) {
    const float* x = tokens.data() + static_cast<std::size_t>(t) * d;
    layer.wq.apply(x, q.data() + static_cast<std::size_t>(t) * d);
    layer.wk.apply(x, k.data() + static_cast<std::size_t>(t) * d);
    layer.wv.apply(x, v.data() + static_cast<std::size_t>(t) * d);
  }

  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  std::vector<float> attn(static_cast<std::size_t>(m) * d);
  std::array<float, kNumComponents> logits;
  for (int t = 0; t < m; ++t) {
    for (int h = 0; h < n_heads; ++h) {
      const float* qh = q.data() + static_cast<std::size_t>(t) * d + h * hd;
      float max_logit = -std::numeric_limits<float>::infinity();
      for (int s = 0; s < m; ++s) {
        if (!mask[s]) continue;
        const float* kh = k.data() + static_cast<std::size_t>(s) * d + h * hd;
        float dot = 0.0f;
        for (int i = 0; i < hd; ++i) dot += qh[i] * kh[i];
        logits[s] = dot * scale;
        max_logit = std::max(max_logit, logits[s]);
      }
      float denom = 0.0f;
      for (int s = 0; s < m; ++s) {
        if (!mask[s]) continue;
        logits[s] = std::exp(logits[s] - max_logit);
        denom += logits[s];
      }
      float* out = attn.data() + static_cast<std::size_t>(t) * d + h * hd;
      for (int i = 0; i < hd; ++i) out[i] = 0.0f;
      for (int s = 0; s < m; ++s) {
        if (!mask[s]) continue;
        const float a = logits[s] / denom;
        const float* vh = v.data() + static_cast<std::size_t>(s) * d + h * hd;
        for (int i = 0; i < hd; ++i) out[i] += a * vh[i];
      }
    }
  }

  std::vector<float> proj(d);
  std::vector<float> ff_mid(cfg.feedforward_dim);
  std::vector<float> ff_out(d);
  for (int t = 0; t < m; ++t) {
    float* x = tokens.data() + static_cast<std::size_t>(t) * d;
    layer.wo.apply(attn.data() + static_cast<std::size_t>(t) * d, proj.data());
    for (int i = 0; i < d; ++i) x[i] += proj[i];
    detail::layer_norm(x, layer.ln1_gamma, layer.ln1_beta, d);
    layer.ff1.apply(x, ff_mid.data());
    for (float& u : ff_mid) u = leaky_relu(u, cfg.leaky_slope);
    layer.ff2.apply(ff_mid.data(), ff_out.data());
    for (int i = 0; i < d; ++i) x[i] += ff_out[i];
    detail::layer_norm(x, layer.ln2_gamma, layer.ln2_beta, d);
  }
}

// Per-component feature embedding: each quantity slice through its own
// affine map + LeakyReLU, concatenated to d_model, plus the component's
// position embedding.
inline std::vector<float> embed(const FrameInput& x, const NetworkWeights& w) {
  const ModelConfig& cfg = w.config;
  std::vector<float> tokens(
      static_cast<std::size_t>(cfg.n_components) * cfg.d_model);
  for (int comp = 0; comp < cfg.n_components; ++comp) {
    float* tok = tokens.data() + static_cast<std::size_t>(comp) * cfg.d_model;
    const auto slices = quantity_slices(comp, cfg.d_model);
    int cursor = 0;
    for (std::size_t qi = 0; qi < slices.size(); ++qi) {
      const QuantitySlice& s = slices[qi];
      const float* in = x.x.data() + component_offset(comp) + s.offset;
      w.embedding[comp][qi].apply(in, tok + cursor);
      for (int i = 0; i < s.out; ++i)
        tok[cursor + i] = leaky_relu(tok[cursor + i], cfg.leaky_slope);
      cursor += s.out;
    }
    const float* pe = w.position_embedding.data() +
                      static_cast<std::size_t>(comp) * cfg.d_model;
    for (int i = 0; i < cfg.d_model; ++i) tok[i] += pe[i];
  }
  return tokens;
}

// Optional wall-clock breakdown of a forward step, for the benchmark.
struct StepTimings {
  double embed_s = 0.0;
  double recurrent_s = 0.0;
  double attention_s = 0.0;
  double heads_s = 0.0;
  double fk_s = 0.0;
};

namespace detail {

struct StageClock {
  StepTimings* t;
  std::chrono::steady_clock::time_point last;
  explicit StageClock(StepTimings* timings)
      : t(timings), last(std::chrono::steady_clock::now()) {}
  void lap(double StepTimings::* field) {
    if (!t) return;
    const auto now = std::chrono::steady_clock::now();
    t->*field += std::chrono::duration<double>(now - last).count();
    last = now;
  }
};

} // namespace detail

inline PoseOutput forward_step(StreamState& state, const FrameInput& x,
                               const NetworkWeights& w, const Skeleton& skel,
                               StepTimings* timings = nullptr) {
  const ModelConfig& cfg = w.config;
  if (state.n_blocks != cfg.n_blocks || state.d_model != cfg.d_model ||
      state.n_components != cfg.n_components)
    throw DimensionError("stream state does not match the model config");

  detail::StageClock clock(timings);
  std::vector<float> tokens = embed(x, w);
  clock.lap(&StepTimings::embed_s);

  for (int b = 0; b < cfg.n_blocks; ++b) {
    const TsflBlock& block = w.blocks[b];
    for (int comp = 0; comp < cfg.n_components; ++comp) {
      float* tok = tokens.data() + static_cast<std::size_t>(comp) * cfg.d_model;
      float* h = state.h_at(b, comp);
      float* c = state.c_at(b, comp);
      recurrent_step(block.cells[comp], tok, h, c);
      std::copy(h, h + cfg.d_model, tok);
    }
    clock.lap(&StepTimings::recurrent_s);
    for (const AttentionLayer& layer : block.encoder)
      attention_encode(tokens, x.mask, layer, cfg);
    clock.lap(&StepTimings::attention_s);
  }

  // Concatenate the final tokens, zeroing masked-absent components so the
  // heads never read them.
  std::vector<float> agg(tokens.size(), 0.0f);
  for (int comp = 0; comp < cfg.n_components; ++comp) {
    if (!x.mask[comp]) continue;
    std::copy(tokens.begin() + static_cast<std::size_t>(comp) * cfg.d_model,
              tokens.begin() + static_cast<std::size_t>(comp + 1) * cfg.d_model,
              agg.begin() + static_cast<std::size_t>(comp) * cfg.d_model);
  }

  PoseOutput out;
  std::vector<float> hidden(cfg.head_hidden);
  w.pose_head1.apply(agg.data(), hidden.data());
  for (float& u : hidden) u = leaky_relu(u, cfg.leaky_slope);
  w.pose_head2.apply(hidden.data(), out.theta_raw.data());
  w.shape_head1.apply(agg.data(), hidden.data());
  for (float& u : hidden) u = leaky_relu(u, cfg.leaky_slope);
  w.shape_head2.apply(hidden.data(), out.beta_raw.data());
  clock.lap(&StepTimings::heads_s);

  for (int j = 0; j < kNumJoints; ++j)
    for (int i = 0; i < 6; ++i)
      out.theta[j][i] = static_cast<double>(out.theta_raw[j * 6 + i]);
  for (int i = 0; i < kNumShapeCoeffs; ++i)
    out.beta[i] = static_cast<double>(out.beta_raw[i]);

  const Vec3 head_pos{static_cast<double>(x.x[0]), static_cast<double>(x.x[1]),
                      static_cast<double>(x.x[2])};
  const Vec3 trans = anchor_root_from_head(skel, out.beta, out.theta, head_pos);
  out.body = forward_kinematics(skel, out.beta, out.theta, trans);
  clock.lap(&StepTimings::fk_s);

  state.frame_counter += 1;
  return out;
}

// Convenience wrapper: fresh state, then forward_step frame by frame.
// Numerically identical to manual streaming.
inline std::vector<PoseOutput> forward_clip(const NetworkWeights& w,
                                            const std::vector<FrameInput>& xs,
                                            const Skeleton& skel) {
  if (xs.empty()) throw EmptyInput("forward_clip needs at least one frame");
  StreamState state = StreamState::make(w.config);
  std::vector<PoseOutput> out;
  out.reserve(xs.size());
  for (const FrameInput& x : xs) out.push_back(forward_step(state, x, w, skel));
  return out;
}

} // namespace hmdtrack
