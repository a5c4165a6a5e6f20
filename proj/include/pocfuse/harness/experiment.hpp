#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/corpus/parse.hpp"
#include "pocfuse/corpus/vocabulary.hpp"
#include "pocfuse/decode.hpp"
#include "pocfuse/eval/metrics.hpp"
#include "pocfuse/eval/report.hpp"
#include "pocfuse/eval/stopwords.hpp"
#include "pocfuse/harness/config.hpp"
#include "pocfuse/harness/synthetic.hpp"
#include "pocfuse/model/checkpoint.hpp"
#include "pocfuse/model/train.hpp"

namespace pocfuse {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct CorpusSplit {
  std::vector<FusionInstance> train;
  std::vector<FusionInstance> test;
};

// Instances ranked by the hash of their id; the lowest round(n * fraction)
// form the test split. Both splits keep corpus order.
inline CorpusSplit split_by_id_hash(const std::vector<FusionInstance>& corpus, double test_fraction) {
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto hx = fnv1a(corpus[x].id), hy = fnv1a(corpus[y].id);
    return hx != hy ? hx < hy : corpus[x].id < corpus[y].id;
  });
  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(corpus.size())));
  std::vector<bool> is_test(corpus.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  CorpusSplit split;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (is_test[i] ? split.test : split.train).push_back(corpus[i]);
  return split;
}

inline std::vector<FusionInstance> load_corpus(const RunConfig& config) {
  if (config.corpus.empty())
    return generate_synthetic_corpus(config.synthetic_instances, config.synthetic_vocab,
                                     config.model.seed);
  return parse_corpus_file(config.corpus);
}

inline std::vector<EncodedInstance> encode_all(const std::vector<FusionInstance>& instances,
                                               const Vocabulary& vocab, const ModelConfig& config) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode_instance(inst, vocab, config.variant, config.max_len));
  return out;
}

inline ModelConfig model_config_for(const RunConfig& config, const Vocabulary& vocab, Variant variant) {
  ModelConfig m = config.model;
  m.vocab_size = vocab.size();
  m.variant = variant;
  m.validate();
  return m;
}

inline Checkpoint train_checkpoint(const std::vector<FusionInstance>& train_set, const Vocabulary& vocab,
                                   const ModelConfig& model_config, const StepCallback& on_step = {}) {
  TrainResult trained = train(encode_all(train_set, vocab, model_config), model_config, on_step);
  return {model_config, vocab, std::move(trained.params)};
}

inline Tokens fuse_one(const FusionInstance& inst, const Checkpoint& ckpt, const RunConfig& config) {
  const FusionModel model{&ckpt.params, ckpt.config, &ckpt.vocabulary};
  if (config.decoder == "beam")
    return beam_fuse(inst.sentence_a, inst.sentence_b, inst.pocs, model, config.beam_width,
                     config.max_out_len);
  return greedy_fuse(inst.sentence_a, inst.sentence_b, inst.pocs, model, config.max_out_len);
}

inline std::vector<Tokens> fuse_all(const std::vector<FusionInstance>& instances, const Checkpoint& ckpt,
                                    const RunConfig& config) {
  std::vector<Tokens> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(fuse_one(inst, ckpt, config));
  return out;
}

struct ExperimentResult {
  SystemReports systems;
  std::string json;   // serialized report, byte-stable for a fixed config
  std::string table;  // aligned text rendering of the same numbers
};

inline std::string system_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "transformer";
    case Variant::linking: return "trans-linking";
    case Variant::sharerepr: return "trans-sharerepr";
  }
  return "transformer";
}

using ProgressLog = std::function<void(const std::string&)>;

inline nlohmann::json run_config_json(const RunConfig& c) {
  nlohmann::json j = model_config_to_json(c.model);
  j.erase("vocab_size");
  j["corpus"] = c.corpus.empty() ? "synthetic" : c.corpus;
  j["synthetic_instances"] = c.synthetic_instances;
  j["synthetic_vocab"] = c.synthetic_vocab;
  j["test_fraction"] = c.test_fraction;
  j["min_count"] = c.min_count;
  j["decoder"] = c.decoder;
  j["beam_width"] = c.beam_width;
  j["max_out_len"] = c.max_out_len;
  return j;
}

// Trains baseline, linking and sharerepr models on the train split, decodes
// the test split (instances with at least one PoC), and scores them alongside
// the concatenation baseline.
inline ExperimentResult run_experiment(const RunConfig& config, const ProgressLog& log = {}) {
  const CorpusSplit split = split_by_id_hash(load_corpus(config), config.test_fraction);
  const std::vector<FusionInstance> test = with_pocs(split.test);
  if (split.train.empty() || test.empty()) throw DataError("experiment needs non-empty train and test splits");
  const Vocabulary vocab = build_vocabulary(split.train, config.min_count);
  const auto& stopwords = default_stopwords();

  ExperimentResult result;
  for (Variant v : {Variant::baseline, Variant::linking, Variant::sharerepr}) {
    if (log) log("training " + system_name(v));
    const Checkpoint ckpt = train_checkpoint(split.train, vocab, model_config_for(config, vocab, v));
    if (log) log("decoding " + system_name(v));
    result.systems.emplace_back(system_name(v), evaluate_corpus(test, fuse_all(test, ckpt, config), stopwords));
  }
  std::vector<Tokens> concat;
  for (const auto& inst : test) concat.push_back(concat_baseline(inst.sentence_a, inst.sentence_b));
  result.systems.emplace_back("concat-baseline", evaluate_corpus(test, concat, stopwords));

  nlohmann::json report = {{"config", run_config_json(config)},
                           {"train_instances", split.train.size()},
                           {"test_instances", test.size()},
                           {"systems", systems_to_json(result.systems)}};
  result.json = report.dump(2) + "\n";
  result.table = render_table(result.systems);
  return result;
}

// Trains one sharerepr model per layer with the PoC head in that layer and
// reports each on the test split.
inline ExperimentResult sweep_poc_layer(const RunConfig& config, const ProgressLog& log = {}) {
  const CorpusSplit split = split_by_id_hash(load_corpus(config), config.test_fraction);
  const std::vector<FusionInstance> test = with_pocs(split.test);
  if (split.train.empty() || test.empty()) throw DataError("sweep needs non-empty train and test splits");
  const Vocabulary vocab = build_vocabulary(split.train, config.min_count);
  ExperimentResult result;
  for (std::size_t layer = 0; layer < config.model.layers; ++layer) {
    ModelConfig m = model_config_for(config, vocab, Variant::sharerepr);
    m.poc_layer = static_cast<int>(layer);
    if (log) log("training sharerepr with PoC head in layer " + std::to_string(layer + 1));
    const Checkpoint ckpt = train_checkpoint(split.train, vocab, m);
    result.systems.emplace_back("layer-" + std::to_string(layer + 1),
                                evaluate_corpus(test, fuse_all(test, ckpt, config), default_stopwords()));
  }
  nlohmann::json report = {{"config", run_config_json(config)},
                           {"poc_head", config.model.poc_head},
                           {"layers", systems_to_json(result.systems)}};
  result.json = report.dump(2) + "\n";
  result.table = render_table(result.systems);
  return result;
}

}  // namespace pocfuse
