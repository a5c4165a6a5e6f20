#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pocfuse/decode.hpp"
#include "pocfuse/error.hpp"
#include "pocfuse/model/config.hpp"

namespace pocfuse {

// Everything a CLI run needs. Every field has a default; a JSON config file
// overrides defaults and `key=value` command-line overrides win over the file.
struct RunConfig {
  std::string corpus;  // empty: use the synthetic corpus
  std::string checkpoint = "model.ckpt";
  std::string report = "report.json";
  std::size_t synthetic_instances = 80;
  std::size_t synthetic_vocab = 50;
  double test_fraction = 0.2;
  int min_count = 1;
  ModelConfig model;  // vocab_size is filled in from the vocabulary
  std::string decoder = "greedy";  // "greedy" or "beam"
  std::size_t beam_width = 4;
  std::size_t max_out_len = kDefaultMaxOutLen;
};

namespace detail {

using Setter = std::function<void(RunConfig&, const nlohmann::json&)>;

inline std::string type_error(const std::string& key, const char* expected) {
  return "config key '" + key + "' expects " + expected;
}

template <typename T>
Setter unsigned_setter(T RunConfig::*field, std::string key) {
  return [field, key](RunConfig& c, const nlohmann::json& v) {
    if (!v.is_number_unsigned()) throw UsageError(type_error(key, "a non-negative integer"));
    c.*field = v.get<T>();
  };
}

template <typename T>
Setter model_unsigned(T ModelConfig::*field, std::string key) {
  return [field, key](RunConfig& c, const nlohmann::json& v) {
    if (!v.is_number_unsigned()) throw UsageError(type_error(key, "a non-negative integer"));
    c.model.*field = v.get<T>();
  };
}

inline Setter model_double(double ModelConfig::*field, std::string key) {
  return [field, key](RunConfig& c, const nlohmann::json& v) {
    if (!v.is_number()) throw UsageError(type_error(key, "a number"));
    c.model.*field = v.get<double>();
  };
}

inline Setter string_setter(std::string RunConfig::*field, std::string key) {
  return [field, key](RunConfig& c, const nlohmann::json& v) {
    if (!v.is_string()) throw UsageError(type_error(key, "a string"));
    c.*field = v.get<std::string>();
  };
}

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> setters = [] {
    std::map<std::string, Setter> s;
    s["corpus"] = string_setter(&RunConfig::corpus, "corpus");
    s["checkpoint"] = string_setter(&RunConfig::checkpoint, "checkpoint");
    s["report"] = string_setter(&RunConfig::report, "report");
    s["synthetic_instances"] = unsigned_setter(&RunConfig::synthetic_instances, "synthetic_instances");
    s["synthetic_vocab"] = unsigned_setter(&RunConfig::synthetic_vocab, "synthetic_vocab");
    s["test_fraction"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() >= 1.0)
        throw UsageError(type_error("test_fraction", "a number in [0, 1)"));
      c.test_fraction = v.get<double>();
    };
    s["min_count"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_number_unsigned() || v.get<int>() < 1)
        throw UsageError(type_error("min_count", "a positive integer"));
      c.min_count = v.get<int>();
    };
    s["layers"] = model_unsigned(&ModelConfig::layers, "layers");
    s["heads"] = model_unsigned(&ModelConfig::heads, "heads");
    s["d_model"] = model_unsigned(&ModelConfig::d_model, "d_model");
    s["d_ff"] = model_unsigned(&ModelConfig::d_ff, "d_ff");
    s["max_len"] = model_unsigned(&ModelConfig::max_len, "max_len");
    s["poc_head"] = model_unsigned(&ModelConfig::poc_head, "poc_head");
    s["seed"] = model_unsigned(&ModelConfig::seed, "seed");
    s["batch_size"] = model_unsigned(&ModelConfig::batch_size, "batch_size");
    s["epochs"] = model_unsigned(&ModelConfig::epochs, "epochs");
    s["mask_rate"] = model_double(&ModelConfig::mask_rate, "mask_rate");
    s["peak_lr"] = model_double(&ModelConfig::peak_lr, "peak_lr");
    s["init_std"] = model_double(&ModelConfig::init_std, "init_std");
    s["warmup_steps"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_number_integer()) throw UsageError(type_error("warmup_steps", "an integer"));
      c.model.warmup_steps = v.get<std::int64_t>();
    };
    s["poc_layer"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_number_integer() || v.get<long long>() < -1)
        throw UsageError(type_error("poc_layer", "an integer >= -1"));
      c.model.poc_layer = v.get<int>();
    };
    s["variant"] = [](RunConfig& c, const nlohmann::json& v) {
      auto parsed = v.is_string() ? parse_variant(v.get<std::string>()) : std::nullopt;
      if (!parsed) throw UsageError(type_error("variant", "one of baseline, linking, sharerepr"));
      c.model.variant = *parsed;
    };
    s["poc_mask_mode"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_string() || (v != "prose" && v != "literal"))
        throw UsageError(type_error("poc_mask_mode", "\"prose\" or \"literal\""));
      c.model.poc_mask_mode = v == "prose" ? PocMaskMode::prose : PocMaskMode::literal;
    };
    s["decoder"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_string() || (v != "greedy" && v != "beam"))
        throw UsageError(type_error("decoder", "\"greedy\" or \"beam\""));
      c.decoder = v.get<std::string>();
    };
    s["beam_width"] = [](RunConfig& c, const nlohmann::json& v) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() < 1)
        throw UsageError(type_error("beam_width", "a positive integer"));
      c.beam_width = v.get<std::size_t>();
    };
    s["max_out_len"] = unsigned_setter(&RunConfig::max_out_len, "max_out_len");
    return s;
  }();
  return setters;
}

inline void apply_setting(RunConfig& config, const std::string& key, const nlohmann::json& value) {
  const auto& setters = config_setters();
  auto it = setters.find(key);
  if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
  it->second(config, value);
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, s] : detail::config_setters()) keys.push_back(k);
  return keys;
}

// Applies one `key=value` override. The value is read as JSON when it parses
// (numbers, booleans, quoted strings) and as a bare string otherwise.
inline void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  detail::apply_setting(config, key, value);
}

// defaults < config file < overrides. An empty path means defaults only; an
// empty file is allowed and changes nothing.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  RunConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        throw UsageError("config file '" + path + "' is not a JSON object");
      for (const auto& [key, value] : j.items()) detail::apply_setting(config, key, value);
    }
  }
  for (const auto& o : overrides) apply_override(config, o);
  return config;
}

}  // namespace pocfuse
