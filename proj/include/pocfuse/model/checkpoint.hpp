#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/model/config.hpp"
#include "pocfuse/model/parameters.hpp"

namespace pocfuse {

// Checkpoint layout, all integers unsigned little-endian:
//
//   magic        8 bytes  "POCFUSE\0"
//   version      u32      kCheckpointVersion
//   config       u64 length + UTF-8 JSON object (model_config_to_json)
//   vocabulary   u64 count, then per token: u64 length + bytes, in id order
//   tensors      u64 count, then per tensor:
//                  u64 name length + name bytes
//                  u64 rank, rank x u64 dims
//                  product(dims) x IEEE-754 binary64, little-endian
//
// Tensors appear in ModelParameters::named() order.
inline constexpr char kCheckpointMagic[8] = {'P', 'O', 'C', 'F', 'U', 'S', 'E', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"layers", c.layers},
          {"heads", c.heads},
          {"d_model", c.d_model},
          {"d_ff", c.d_ff},
          {"vocab_size", c.vocab_size},
          {"max_len", c.max_len},
          {"variant", std::string(to_string(c.variant))},
          {"poc_layer", c.poc_layer},
          {"poc_head", c.poc_head},
          {"poc_mask_mode", std::string(to_string(c.poc_mask_mode))},
          {"mask_rate", c.mask_rate},
          {"seed", c.seed},
          {"peak_lr", c.peak_lr},
          {"warmup_steps", c.warmup_steps},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"init_std", c.init_std}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.layers = j.at("layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    auto variant = parse_variant(j.at("variant").get<std::string>());
    if (!variant) throw DataError("checkpoint has an unknown variant");
    c.variant = *variant;
    c.poc_layer = j.at("poc_layer").get<int>();
    c.poc_head = j.at("poc_head").get<std::size_t>();
    c.poc_mask_mode = j.at("poc_mask_mode").get<std::string>() == "literal" ? PocMaskMode::literal
                                                                            : PocMaskMode::prose;
    c.mask_rate = j.at("mask_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.peak_lr = j.at("peak_lr").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<std::int64_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.init_std = j.at("init_std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocabulary;
  ModelParameters params;
};

namespace detail {

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("checkpoint is truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("checkpoint is truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline std::string read_string(std::istream& in, std::uint64_t limit = 1u << 28) {
  const std::uint64_t n = read_u64(in);
  if (n > limit) throw DataError("checkpoint string length is implausible");
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
    throw DataError("checkpoint is truncated");
  return s;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::write_u32(out, kCheckpointVersion);
  detail::write_string(out, model_config_to_json(ckpt.config).dump());
  detail::write_u64(out, ckpt.vocabulary.size());
  for (const auto& t : ckpt.vocabulary.tokens()) detail::write_string(out, t);
  const auto named = ckpt.params.named();
  detail::write_u64(out, named.size());
  for (const auto& [name, t] : named) {
    detail::write_string(out, name);
    detail::write_u64(out, t->rank());
    for (std::size_t d : t->shape()) detail::write_u64(out, d);
    for (double v : t->values()) detail::write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("failed to write checkpoint");
}

inline Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  const std::uint32_t version = detail::read_u32(in);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  try {
    ckpt.config = model_config_from_json(nlohmann::json::parse(detail::read_string(in)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }
  const std::uint64_t vocab_count = detail::read_u64(in);
  if (vocab_count > (1u << 24)) throw DataError("checkpoint vocabulary size is implausible");
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < vocab_count; ++i) tokens.push_back(detail::read_string(in, 1 << 16));
  ckpt.vocabulary = Vocabulary::from_id_order(tokens);
  if (ckpt.vocabulary.size() != ckpt.config.vocab_size)
    throw DataError("checkpoint vocabulary size differs from its config");
  try {
    ckpt.config.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  }

  ckpt.params = init_parameters(ckpt.config);
  auto named = ckpt.params.named();
  if (detail::read_u64(in) != named.size()) throw DataError("checkpoint tensor count mismatch");
  for (auto& [name, t] : named) {
    if (detail::read_string(in, 1 << 10) != name)
      throw DataError("checkpoint tensor order mismatch at " + name);
    const std::uint64_t rank = detail::read_u64(in);
    if (rank > 8) throw DataError("checkpoint tensor rank is implausible");
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(detail::read_u64(in));
    if (shape != t->shape()) throw DataError("checkpoint tensor shape mismatch at " + name);
    for (double& v : t->values()) v = std::bit_cast<double>(detail::read_u64(in));
    if (!t->all_finite()) throw DataError("checkpoint tensor " + name + " has non-finite values");
  }
  return ckpt;
}

inline void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  save_checkpoint(out, ckpt);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace pocfuse
