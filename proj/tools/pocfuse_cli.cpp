// pocfuse: train, decode, evaluate and inspect sentence-fusion models.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pocfuse/pocfuse.hpp"

using namespace pocfuse;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<std::size_t> beam;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--set", o.overrides, "config override key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--variant", o.variant, "baseline, linking or sharerepr");
  cmd->add_option("--beam", o.beam, "decode with beam search of this width");
  cmd->add_option("--out", o.out, "output path (default: stdout or the config's path)");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig c = load_config(o.config_path, o.overrides);
  if (o.seed) c.model.seed = *o.seed;
  if (!o.variant.empty()) {
    auto v = parse_variant(o.variant);
    if (!v) throw UsageError("unknown variant '" + o.variant + "'");
    c.model.variant = *v;
  }
  if (o.beam) {
    if (*o.beam < 1) throw UsageError("--beam must be at least 1");
    c.decoder = "beam";
    c.beam_width = *o.beam;
  }
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write '" + path + "'");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// "ID:SENT:START:END", e.g. "1:a:0:2".
std::vector<PoC> parse_poc_flags(const std::vector<std::string>& flags) {
  std::map<int, PoC> by_id;
  for (const std::string& flag : flags) {
    std::vector<std::string> parts;
    std::stringstream ss(flag);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 4 || (parts[1] != "a" && parts[1] != "b"))
      throw UsageError("--poc '" + flag + "' is not of the form ID:a|b:START:END");
    int id = 0;
    std::size_t start = 0, end = 0;
    try {
      id = std::stoi(parts[0]);
      start = std::stoul(parts[2]);
      end = std::stoul(parts[3]);
    } catch (const std::exception&) {
      throw UsageError("--poc '" + flag + "' has a non-numeric field");
    }
    PoC& poc = by_id[id];
    poc.poc_id = id;
    poc.mentions.push_back({parts[1] == "a" ? SentenceId::a : SentenceId::b, {start, end}});
  }
  std::vector<PoC> pocs;
  for (auto& [id, poc] : by_id) pocs.push_back(std::move(poc));
  return pocs;
}

struct InstanceSource {
  std::string input;
  std::size_t index = 0;
  std::string sent_a, sent_b;
  std::vector<std::string> pocs;

  void add_to(CLI::App* cmd, bool with_index) {
    cmd->add_option("--input", input, "corpus JSONL file");
    if (with_index) cmd->add_option("--index", index, "0-based instance index within --input");
    cmd->add_option("--sent-a", sent_a, "first source sentence");
    cmd->add_option("--sent-b", sent_b, "second source sentence");
    cmd->add_option("--poc", pocs, "PoC mention ID:a|b:START:END (repeatable)");
  }

  bool single() const { return input.empty(); }

  FusionInstance from_flags() const {
    if (sent_a.empty() && sent_b.empty()) throw UsageError("give --input or --sent-a/--sent-b");
    FusionInstance inst;
    inst.id = "cli";
    inst.sentence_a = tokenize(sent_a);
    inst.sentence_b = tokenize(sent_b);
    inst.pocs = parse_poc_flags(pocs);
    try {
      validate_instance(inst);
    } catch (const RecordError& e) {
      throw DataError(std::string("--poc: ") + e.what());
    }
    return inst;
  }
};

void log_line(const std::string& s) { std::cerr << s << '\n'; }

int cmd_train(const CommonOptions& o) {
  RunConfig c = resolve(o);
  const CorpusSplit split = split_by_id_hash(load_corpus(c), c.test_fraction);
  if (split.train.empty()) throw DataError("training split is empty");
  const Vocabulary vocab = build_vocabulary(split.train, c.min_count);
  const ModelConfig m = model_config_for(c, vocab, c.model.variant);
  const Checkpoint ckpt = train_checkpoint(split.train, vocab, m, [](std::size_t step, double loss) {
    if (step % 50 == 0) std::cerr << "step " << step << " loss " << loss << '\n';
    return true;
  });
  const std::string path = o.out.empty() ? c.checkpoint : o.out;
  save_checkpoint_file(path, ckpt);
  std::cerr << "wrote " << path << " (" << split.train.size() << " training instances)\n";
  return 0;
}

int cmd_fuse(const CommonOptions& o, const InstanceSource& src, const std::string& checkpoint) {
  const RunConfig c = resolve(o);
  const Checkpoint ckpt = load_checkpoint_file(checkpoint.empty() ? c.checkpoint : checkpoint);
  std::vector<FusionInstance> instances;
  if (src.single())
    instances.push_back(src.from_flags());
  else
    instances = parse_corpus_file(src.input);
  std::string text;
  for (const Tokens& out : fuse_all(instances, ckpt, c)) text += join_tokens(out) + "\n";
  write_text(o.out, text);
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& outputs_path, const std::string& corpus_path,
                 const std::string& system) {
  const RunConfig c = resolve(o);
  const std::string cpath = corpus_path.empty() ? c.corpus : corpus_path;
  if (cpath.empty()) throw UsageError("evaluate needs --corpus or a corpus in the config");
  const std::vector<FusionInstance> corpus = parse_corpus_file(cpath);
  const std::vector<std::string> lines = read_lines(outputs_path);
  if (lines.size() != corpus.size())
    throw DataError("outputs file has " + std::to_string(lines.size()) + " lines but corpus has " +
                    std::to_string(corpus.size()) + " instances");
  std::vector<FusionInstance> kept;
  std::vector<Tokens> outputs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].pocs.empty()) continue;
    kept.push_back(corpus[i]);
    outputs.push_back(tokenize(lines[i]));
  }
  if (kept.empty()) throw DataError("no instance in the corpus has a PoC");
  const SystemReports systems{{system, evaluate_corpus(kept, outputs, default_stopwords())}};
  nlohmann::json j = {{"instances", kept.size()}, {"systems", systems_to_json(systems)}};
  std::cerr << render_table(systems);
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

nlohmann::json mask_json(const AttentionMask& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<int> row(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) row[j] = m.allowed(i, j) ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json matrix_json(const num::Tensor& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto r = t.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

int cmd_inspect(const CommonOptions& o, const InstanceSource& src, const std::string& checkpoint) {
  const RunConfig c = resolve(o);
  const Checkpoint ckpt = load_checkpoint_file(checkpoint.empty() ? c.checkpoint : checkpoint);
  const ModelConfig& mc = ckpt.config;
  EncodedInstance enc;
  std::string id;
  if (src.single()) {
    const FusionInstance inst = src.from_flags();
    id = inst.id;
    enc = encode_source(inst.sentence_a, inst.sentence_b, inst.pocs, ckpt.vocabulary, mc.variant, mc.max_len, 0);
  } else {
    const auto corpus = parse_corpus_file(src.input);
    if (src.index >= corpus.size())
      throw UsageError("--index " + std::to_string(src.index) + " is past the end of the corpus");
    id = corpus[src.index].id;
    enc = encode_instance(corpus[src.index], ckpt.vocabulary, mc.variant, mc.max_len);
  }

  std::vector<std::vector<num::Tensor>> alphas(mc.layers, std::vector<num::Tensor>(mc.heads));
  const LayerAttentionObserver observer = [&](std::size_t l, std::size_t h, const num::Tensor& a) {
    alphas[l][h] = a;
  };
  num::Tape tape(num::Tape::Mode::inference);
  forward(bind(tape, ckpt.params), enc, mc, &observer);

  const LayerMasks masks = build_masks(enc, mc);
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < mc.layers; ++l) {
    nlohmann::json heads = nlohmann::json::array();
    for (std::size_t h = 0; h < mc.heads; ++h) {
      const bool poc = masks.has_poc_head && l == mc.poc_layer_index() && h == mc.poc_head;
      heads.push_back({{"head", h},
                       {"poc_head", poc},
                       {"mask", mask_json(poc ? masks.poc : masks.base)},
                       {"alpha", matrix_json(alphas[l][h])}});
    }
    layers.push_back({{"layer", l}, {"heads", std::move(heads)}});
  }
  std::vector<std::string> tokens;
  for (int t : enc.ids) tokens.push_back(ckpt.vocabulary.token(t));
  nlohmann::json j = {{"id", id},
                      {"variant", std::string(to_string(mc.variant))},
                      {"tokens", tokens},
                      {"source_len", enc.source_len},
                      {"z", enc.z},
                      {"layers", std::move(layers)}};
  write_text(o.out, j.dump() + "\n");
  return 0;
}

int cmd_make_synthetic(const CommonOptions& o, std::size_t n, std::size_t vocab) {
  const RunConfig c = resolve(o);
  std::ostringstream text;
  write_corpus(text, generate_synthetic_corpus(n ? n : c.synthetic_instances,
                                               vocab ? vocab : c.synthetic_vocab, c.model.seed));
  write_text(o.out, text.str());
  return 0;
}

int cmd_experiment(const CommonOptions& o, bool sweep) {
  const RunConfig c = resolve(o);
  const ExperimentResult r = sweep ? sweep_poc_layer(c, log_line) : run_experiment(c, log_line);
  std::cout << r.table;
  const std::string path = o.out.empty() ? c.report : o.out;
  write_text(path, r.json);
  if (path != "-") std::cerr << "wrote " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence fusion with points-of-correspondence attention"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every command");

  CommonOptions common;
  InstanceSource source;
  std::string checkpoint, outputs_path, corpus_path, system = "system";
  std::size_t synth_n = 0, synth_vocab = 0;

  auto* train = app.add_subcommand("train", "train one model on the training split");
  auto* fuse = app.add_subcommand("fuse", "generate fusions, one per line");
  auto* evaluate = app.add_subcommand("evaluate", "score outputs against a corpus");
  auto* inspect = app.add_subcommand("inspect-attention", "dump masks and attention weights as JSON");
  auto* synth = app.add_subcommand("make-synthetic", "write a synthetic corpus as JSONL");
  auto* experiment = app.add_subcommand("experiment", "train and compare all systems");
  auto* sweep = app.add_subcommand("sweep-poc-layer", "move the PoC head through every layer");
  for (auto* cmd : {train, fuse, evaluate, inspect, synth, experiment, sweep}) add_common(cmd, common);

  for (auto* cmd : {fuse, inspect}) cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
  source.add_to(fuse, false);
  source.add_to(inspect, true);
  evaluate->add_option("--outputs", outputs_path, "system outputs, one per line")->required();
  evaluate->add_option("--corpus", corpus_path, "reference corpus JSONL");
  evaluate->add_option("--system", system, "system name in the report");
  synth->add_option("-n,--instances", synth_n, "number of instances");
  synth->add_option("--vocab-size", synth_vocab, "lexicon size (>= 20)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "pocfuse: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*train) return cmd_train(common);
    if (*fuse) return cmd_fuse(common, source, checkpoint);
    if (*evaluate) return cmd_evaluate(common, outputs_path, corpus_path, system);
    if (*inspect) return cmd_inspect(common, source, checkpoint);
    if (*synth) return cmd_make_synthetic(common, synth_n, synth_vocab);
    if (*experiment) return cmd_experiment(common, false);
    if (*sweep) return cmd_experiment(common, true);
  } catch (const UsageError& e) {
    std::cerr << "pocfuse: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "pocfuse: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "pocfuse: internal error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
