#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slrobust/core/affine.hpp"
#include "slrobust/core/error.hpp"
#include "slrobust/dae/dae.hpp"

// Flat binary parameter format, all fields little-endian:
//   u32 version (= 1)
//   u32 layer count
//   per layer: u32 rows (out), u32 cols (in)
//   per layer: f64 weight[rows*cols] row-major, then f64 bias[rows]
namespace slrobust::dae {

namespace fs = std::filesystem;

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline std::vector<unsigned char> encode_layers(const std::vector<const Affine*>& layers) {
  std::vector<unsigned char> out;
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
  for (const Affine* l : layers) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l->out_dim()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l->in_dim()));
  }
  for (const Affine* l : layers) {
    for (double w : l->weight.data()) detail::put_le<double>(out, w);
    for (double b : l->bias) detail::put_le<double>(out, b);
  }
  return out;
}

inline std::vector<Affine> decode_layers(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = detail::get_le<std::uint32_t>(bytes, pos);
  std::vector<Affine> layers;
  layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rows = detail::get_le<std::uint32_t>(bytes, pos);
    const auto cols = detail::get_le<std::uint32_t>(bytes, pos);
    layers.emplace_back(cols, rows);
  }
  for (auto& l : layers) {
    for (double& w : l.weight.data()) w = detail::get_le<double>(bytes, pos);
    for (double& b : l.bias) b = detail::get_le<double>(bytes, pos);
  }
  if (pos != bytes.size()) throw IoError("checkpoint has trailing bytes");
  return layers;
}

inline void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<const Affine*> layers_of(const DaeParams& p) {
  return {&p.encoder.first, &p.encoder.second, &p.decoder.first, &p.decoder.second};
}

inline void save_params(const fs::path& path, const DaeParams& p) {
  write_bytes(path, encode_layers(layers_of(p)));
}

inline DaeParams load_params(const fs::path& path, Activation act = Activation::relu) {
  auto layers = decode_layers(read_bytes(path));
  if (layers.size() != 4) throw IoError("DAE checkpoint must hold exactly 4 layers");
  DaeParams p{{layers[0], layers[1]}, {layers[2], layers[3]}, act};
  if (p.encoder.second.in_dim() != p.encoder.first.out_dim() ||
      p.decoder.first.in_dim() != p.encoder.second.out_dim() ||
      p.decoder.second.in_dim() != p.decoder.first.out_dim() ||
      p.decoder.second.out_dim() != p.encoder.first.in_dim())
    throw IoError("DAE checkpoint layer shapes do not compose");
  return p;
}

NLOHMANN_JSON_SERIALIZE_ENUM(SwapOrientation, {
                                                  {SwapOrientation::keep_background, "keep_background"},
                                                  {SwapOrientation::keep_signer, "keep_signer"},
                                              })

inline void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"margin", c.margin},         {"alpha", c.alpha},
       {"momentum", c.momentum},     {"external_ve", c.external_ve},
       {"external_va", c.external_va}, {"orientation", c.orientation}};
}

inline void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  if (j.contains("margin")) j.at("margin").get_to(c.margin);
  if (j.contains("alpha")) j.at("alpha").get_to(c.alpha);
  if (j.contains("momentum")) j.at("momentum").get_to(c.momentum);
  if (j.contains("external_ve")) j.at("external_ve").get_to(c.external_ve);
  if (j.contains("external_va")) j.at("external_va").get_to(c.external_va);
  if (j.contains("orientation")) j.at("orientation").get_to(c.orientation);
  c.validate();
}

}  // namespace slrobust::dae
