// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmdtrack/errors.hpp"
#include "hmdtrack/network.hpp"

namespace hmdtrack {

inline constexpr const char* kWeightsMagic = "HMDTRACK_WEIGHTS";
inline constexpr int kWeightsFormatVersion = 1;

namespace detail {

inline void to_little_endian(std::vector<float>& v) {
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : v) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
}

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"n_blocks", c.n_blocks},
                        {"d_model", c.d_model},
                        {"n_components", c.n_components},
                        {"transformer_layers_per_block",
                         c.transformer_layers_per_block},
                        {"attention_heads", c.attention_heads},
                        {"feedforward_dim", c.feedforward_dim},
                        {"head_hidden", c.head_hidden},
                        {"pose_out", c.pose_out},
                        {"shape_out", c.shape_out},
                        {"leaky_slope", c.leaky_slope}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_blocks = j.at("n_blocks").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_components = j.at("n_components").get<int>();
  c.transformer_layers_per_block =
      j.at("transformer_layers_per_block").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.feedforward_dim = j.at("feedforward_dim").get<int>();
  c.head_hidden = j.at("head_hidden").get<int>();
  c.pose_out = j.at("pose_out").get<int>();
  c.shape_out = j.at("shape_out").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<float>();
  return c;
}

} // namespace detail

// FNV-1a 64 over the little-endian float payload; echoed in eval reports so
// a result can be traced to the exact weights that produced it.
inline std::uint64_t weights_checksum(const NetworkWeights& weights) {
  std::uint64_t h = 1469598103934665603ull;
  for_each_parameter(weights, [&](const std::string&, const std::vector<float>& v,
                                  const std::vector<int>&) {
    for (float f : v) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      for (int b = 0; b < 4; ++b) {
        h ^= (u >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  });
  return h;
}

// File layout: one header line "HMDTRACK_WEIGHTS v<version> <manifest bytes>",
// the JSON manifest, a newline, then the contiguous little-endian float32
// payload in manifest order.
inline void save_weights(const NetworkWeights& weights, const std::string& path) {
  nlohmann::json params = nlohmann::json::array();
  std::size_t offset = 0;
  for_each_parameter(weights, [&](const std::string& name,
                                  const std::vector<float>& v,
                                  const std::vector<int>& shape) {
    params.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
    offset += v.size();
  });
  nlohmann::json manifest{{"format_version", kWeightsFormatVersion},
                          {"config", detail::config_to_json(weights.config)},
                          {"params", params},
                          {"total_floats", offset}};
  const std::string mtext = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << kWeightsMagic << " v" << kWeightsFormatVersion << " " << mtext.size()
      << "\n";
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  out.put('\n');
  for_each_parameter(weights, [&](const std::string&, const std::vector<float>& v,
                                  const std::vector<int>&) {
    std::vector<float> le = v;
    detail::to_little_endian(le);
    out.write(reinterpret_cast<const char*>(le.data()),
              static_cast<std::streamsize>(le.size() * sizeof(float)));
  });
  if (!out) throw ParseError("failed writing '" + path + "'");
}

inline NetworkWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string magic, version;
  std::size_t manifest_bytes = 0;
  in >> magic >> version >> manifest_bytes;
  if (!in || magic != kWeightsMagic)
    throw ParseError("not a weight file: '" + path + "'");
  if (version != "v" + std::to_string(kWeightsFormatVersion))
    throw VersionMismatch("unsupported weight format " + version);
  in.get(); // newline after the header

  std::string mtext(manifest_bytes, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(manifest_bytes));
  if (!in) throw ParseError("truncated manifest in '" + path + "'");
  in.get();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what());
  }
  if (manifest.at("format_version").get<int>() != kWeightsFormatVersion)
    throw VersionMismatch("unsupported manifest version");

  ModelConfig config = detail::config_from_json(manifest.at("config"));
  NetworkWeights w = make_weights(config);

  const auto& params = manifest.at("params");
  std::size_t index = 0;
  std::size_t offset = 0;
  bool shape_ok = true;
  std::string mismatch;
  for_each_parameter(w, [&](const std::string& name, std::vector<float>& v,
                            const std::vector<int>& shape) {
    if (!shape_ok) return;
    if (index >= params.size()) {
      shape_ok = false;
      mismatch = "manifest lists too few parameters";
      return;
    }
    const auto& p = params[index++];
    if (p.at("name").get<std::string>() != name ||
        p.at("shape").get<std::vector<int>>() != shape ||
        p.at("offset").get<std::size_t>() != offset) {
      shape_ok = false;
      mismatch = "parameter '" + name + "' does not match the manifest";
      return;
    }
    offset += v.size();
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(float))) {
      shape_ok = false;
      mismatch = "truncated payload";
      return;
    }
    detail::to_little_endian(v);
  });
  if (!shape_ok) {
    if (mismatch == "truncated payload")
      throw ParseError(mismatch + " in '" + path + "'");
    throw ShapeMismatch(mismatch);
  }
  if (index != params.size())
    throw ShapeMismatch("manifest lists extra parameters");
  if (manifest.at("total_floats").get<std::size_t>() != offset)
    throw ShapeMismatch("total_floats disagrees with the parameter shapes");
  // Reject trailing garbage so save -> load -> save is bit-stable.
  char extra;
  if (in.read(&extra, 1); in.gcount() != 0)
    throw ParseError("trailing bytes after payload in '" + path + "'");
  for_each_parameter(w, [&](const std::string&, std::vector<float>& v,
                            const std::vector<int>&) {
    for (float f : v)
      if (!std::isfinite(f)) throw ParseError("non-finite parameter value");
  });
  return w;
}

} // namespace hmdtrack
