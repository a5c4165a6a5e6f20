#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pocfuse/corpus/encode.hpp"
#include "pocfuse/harness/synthetic.hpp"
#include "pocfuse/model/checkpoint.hpp"
#include "pocfuse/model/denoise.hpp"
#include "pocfuse/model/train.hpp"
#include "pocfuse/model/transformer.hpp"
#include "pocfuse/numerics/gradcheck.hpp"

using namespace pocfuse;

namespace {

struct Fixture {
  std::vector<FusionInstance> corpus;
  Vocabulary vocab;
  ModelConfig config;
};

Fixture small_fixture(Variant variant = Variant::baseline, std::size_t n = 8) {
  Fixture f;
  f.corpus = generate_synthetic_corpus(n, 50, 1);
  f.vocab = build_vocabulary(f.corpus, 1);
  f.config.layers = 2;
  f.config.heads = 2;
  f.config.d_model = 16;
  f.config.d_ff = 32;
  f.config.vocab_size = f.vocab.size();
  f.config.variant = variant;
  return f;
}

num::Tensor run_forward(const EncodedInstance& enc, const ModelParameters& p, const ModelConfig& c) {
  num::Tape tape(num::Tape::Mode::inference);
  return forward(bind(tape, p), enc, c).value();
}

void zero_all(ModelParameters& p) {
  for (auto& [name, t] : p.named())
    for (double& v : t->values()) v = 0.0;
}

}  // namespace

TEST(Forward, OutputShape) {
  const Fixture f = small_fixture();
  const auto params = init_parameters(f.config);
  for (const auto& inst : f.corpus) {
    const auto enc = encode_instance(inst, f.vocab, Variant::baseline);
    const auto h = run_forward(enc, params, f.config);
    EXPECT_EQ(h.rows(), enc.size());
    EXPECT_EQ(h.cols(), f.config.d_model);
  }
}

TEST(Forward, ZeroParametersGiveIdenticalRows) {
  const Fixture f = small_fixture();
  auto params = init_parameters(f.config);
  zero_all(params);
  const auto h = run_forward(encode_instance(f.corpus[0], f.vocab, Variant::baseline), params, f.config);
  for (std::size_t i = 1; i < h.rows(); ++i)
    for (std::size_t c = 0; c < h.cols(); ++c) EXPECT_EQ(h(i, c), h(0, c));
}

TEST(Forward, Deterministic) {
  const Fixture f = small_fixture(Variant::sharerepr);
  const auto enc = encode_instance(f.corpus[2], f.vocab, Variant::sharerepr);
  const auto a = run_forward(enc, init_parameters(f.config), f.config);
  const auto b = run_forward(enc, init_parameters(f.config), f.config);
  EXPECT_EQ(a, b);
}

TEST(Forward, OverlongInputIsAnError) {
  Fixture f = small_fixture();
  const auto enc = encode_instance(f.corpus[0], f.vocab, Variant::baseline);
  f.config.max_len = enc.size() - 1;
  const auto params = init_parameters(f.config);
  EXPECT_THROW(run_forward(enc, params, f.config), DataError);
}

TEST(Forward, ShareReprWithAllZeroIndexEqualsBaseline) {
  Fixture f = small_fixture(Variant::sharerepr);
  f.config.init_std = 0.3;
  const auto params = init_parameters(f.config);
  FusionInstance inst = f.corpus[0];
  inst.pocs.clear();
  const auto enc = encode_instance(inst, f.vocab, Variant::sharerepr);
  ASSERT_TRUE(std::all_of(enc.z.begin(), enc.z.end(), [](int z) { return z == 0; }));
  ModelConfig baseline = f.config;
  baseline.variant = Variant::baseline;
  EXPECT_EQ(run_forward(enc, params, f.config), run_forward(enc, params, baseline));
}

TEST(Forward, PocHeadChangesOutputWhenPocsPresent) {
  Fixture f = small_fixture(Variant::sharerepr);
  f.config.init_std = 0.3;
  const auto params = init_parameters(f.config);
  const auto enc = encode_instance(f.corpus[0], f.vocab, Variant::sharerepr);
  ModelConfig baseline = f.config;
  baseline.variant = Variant::baseline;
  EXPECT_NE(run_forward(enc, params, f.config), run_forward(enc, params, baseline));
}

TEST(OutputDistribution, ZeroHiddenIsUniform) {
  const Fixture f = small_fixture();
  const auto params = init_parameters(f.config);
  const std::vector<double> zero(f.config.d_model, 0.0);
  const auto p = output_distribution(zero, params);
  ASSERT_EQ(p.size(), f.vocab.size());
  for (double v : p) EXPECT_NEAR(v, 1.0 / static_cast<double>(f.vocab.size()), 1e-15);
}

TEST(OutputDistribution, SumsToOne) {
  Fixture f = small_fixture();
  f.config.init_std = 0.5;
  const auto params = init_parameters(f.config);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> h(f.config.d_model);
    for (double& v : h) v = normal(rng);
    double total = 0.0;
    for (double v : output_distribution(h, params)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(OutputDistribution, TiedProjectionRowControlsOneLogit) {
  Fixture f = small_fixture();
  f.config.init_std = 0.3;
  auto params = init_parameters(f.config);
  num::Tensor h = num::Tensor::matrix(1, f.config.d_model);
  for (std::size_t c = 0; c < h.size(); ++c) h[c] = std::sin(1.0 + static_cast<double>(c));
  auto logits = [&] {
    num::Tape tape(num::Tape::Mode::inference);
    return output_logits(tape.constant(h), bind(tape, params)).value();
  };
  const auto before = logits();
  const int token = 30;
  for (std::size_t c = 0; c < f.config.d_model; ++c) params.token_embedding(token, c) += 0.25;
  const auto after = logits();
  for (std::size_t v = 0; v < before.size(); ++v) {
    if (static_cast<int>(v) == token)
      EXPECT_NE(after[v], before[v]);
    else
      EXPECT_EQ(after[v], before[v]);
  }
  EXPECT_EQ(&params.output_projection(), &params.token_embedding);
}

TEST(Denoise, MasksSeventyPercentOfTen) {
  EncodedInstance enc;
  enc.source_len = 3;
  enc.ids = {Vocabulary::kBos, Vocabulary::kSep, Vocabulary::kSep};
  enc.segments = {0, 0, 0};
  enc.z = {0, 0, 0};
  for (int i = 0; i < 10; ++i) {
    enc.ids.push_back(30 + i);
    enc.segments.push_back(1);
  }
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = mask_summary(enc, 0.7, rng);
    EXPECT_EQ(m.positions.size(), 7u);
    for (std::size_t k = 0; k < m.positions.size(); ++k) {
      EXPECT_GE(m.positions[k], 3);
      EXPECT_EQ(m.input.ids[m.positions[k]], Vocabulary::kMask);
      EXPECT_EQ(m.targets[k], enc.ids[m.positions[k]]);
    }
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(m.input.ids[i], enc.ids[i]);
  }
  EXPECT_EQ(masked_count(1, 0.1), 1u);
  EXPECT_EQ(masked_count(4, 1.0), 4u);
}

TEST(Denoise, UniformModelLossIsLogVocab) {
  const Fixture f = small_fixture();
  auto params = init_parameters(f.config);
  zero_all(params);
  std::vector<EncodedInstance> batch;
  for (const auto& inst : f.corpus) batch.push_back(encode_instance(inst, f.vocab, Variant::baseline));
  std::mt19937_64 rng(9);
  const auto lg = denoise_batch(batch, params, f.config, rng);
  EXPECT_NEAR(lg.loss, std::log(static_cast<double>(f.vocab.size())), 1e-12);
}

TEST(Denoise, EmptySummaryIsAnError) {
  EncodedInstance enc;
  enc.ids = {Vocabulary::kBos, Vocabulary::kSep};
  enc.segments = {0, 0};
  enc.source_len = 2;
  enc.z = {0, 0};
  std::mt19937_64 rng(1);
  EXPECT_THROW(mask_summary(enc, 0.7, rng), DataError);
}

TEST(Denoise, LiteralMaskModeGradientsMatchFiniteDifferences) {
  Fixture f = small_fixture(Variant::sharerepr);
  f.config.d_model = 8;
  f.config.d_ff = 8;
  f.config.layers = 1;
  f.config.init_std = 0.3;
  f.config.poc_mask_mode = PocMaskMode::literal;
  auto params = init_parameters(f.config);
  std::mt19937_64 rng(2);
  std::vector<MaskedInstance> batch{
      mask_summary(encode_instance(f.corpus[1], f.vocab, Variant::sharerepr), 0.7, rng)};
  const auto lg = loss_and_gradients(batch, params, f.config);
  std::vector<num::GradientGroup> groups;
  auto named = params.named();
  for (std::size_t i = 0; i < named.size(); ++i)
    groups.push_back({named[i].first, named[i].second, lg.gradients[i]});
  auto loss = [&] {
    num::Tape tape(num::Tape::Mode::inference);
    return denoise_loss(bind(tape, params), batch, f.config).value()[0];
  };
  const auto report = num::finite_difference_check(loss, groups, 1e-4, 1e-4);
  for (const auto& g : report.groups) EXPECT_TRUE(g.passed) << g.name << " " << g.max_relative_error;
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  Fixture f = small_fixture();
  f.config.epochs = 0;
  std::vector<EncodedInstance> enc;
  for (const auto& inst : f.corpus) enc.push_back(encode_instance(inst, f.vocab, Variant::baseline));
  const auto result = train(enc, f.config);
  EXPECT_TRUE(result.losses.empty());
  EXPECT_EQ(result.params, init_parameters(f.config));
}

TEST(Train, SameSeedSameLossHistory) {
  Fixture f = small_fixture(Variant::linking);
  f.config.epochs = 3;
  f.config.batch_size = 3;
  std::vector<EncodedInstance> enc;
  for (const auto& inst : f.corpus) enc.push_back(encode_instance(inst, f.vocab, Variant::linking));
  const auto a = train(enc, f.config);
  const auto b = train(enc, f.config);
  EXPECT_EQ(a.losses.size(), 9u);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.params, b.params);
}

TEST(Train, LossFallsOnOverfitCorpus) {
  Fixture f = small_fixture();
  f.config = ModelConfig{};
  f.config.vocab_size = f.vocab.size();
  f.config.epochs = 200;
  std::vector<EncodedInstance> enc;
  for (const auto& inst : f.corpus) enc.push_back(encode_instance(inst, f.vocab, Variant::baseline));
  const auto result = train(enc, f.config);
  ASSERT_EQ(result.losses.size(), 200u);
  EXPECT_LT(result.losses[199], result.losses[0]);
  for (const auto& [name, t] : result.params.named()) EXPECT_TRUE(t->all_finite()) << name;
}

TEST(Config, Validation) {
  ModelConfig c;
  c.vocab_size = 40;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.poc_layer_index(), 1u);
  c.layers = 2;
  EXPECT_EQ(c.poc_layer_index(), 0u);
  c.layers = 5;
  EXPECT_EQ(c.poc_layer_index(), 2u);
  ModelConfig bad = c;
  bad.heads = 3;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = c;
  bad.mask_rate = 0.0;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = c;
  bad.poc_layer = 5;
  EXPECT_THROW(bad.validate(), UsageError);
  bad = c;
  bad.poc_head = 4;
  EXPECT_THROW(bad.validate(), UsageError);
}

TEST(Checkpoint, RoundTrip) {
  Fixture f = small_fixture(Variant::sharerepr);
  f.config.poc_layer = 1;
  f.config.poc_mask_mode = PocMaskMode::literal;
  const Checkpoint ckpt{f.config, f.vocab, init_parameters(f.config)};
  std::stringstream buf;
  save_checkpoint(buf, ckpt);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("POCFUSE\0", 8));
  const Checkpoint back = load_checkpoint(buf);
  EXPECT_EQ(back.params, ckpt.params);
  EXPECT_EQ(back.vocabulary, ckpt.vocabulary);
  EXPECT_EQ(model_config_to_json(back.config), model_config_to_json(ckpt.config));
}

TEST(Checkpoint, RejectsVersionMismatchAndGarbage) {
  const Fixture f = small_fixture();
  const Checkpoint ckpt{f.config, f.vocab, init_parameters(f.config)};
  std::stringstream buf;
  save_checkpoint(buf, ckpt);
  std::string bytes = buf.str();
  bytes[8] = 2;  // version field, little-endian u32
  std::istringstream wrong_version(bytes);
  try {
    load_checkpoint(wrong_version);
    FAIL() << "expected a version error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  std::istringstream garbage("not a checkpoint");
  EXPECT_THROW(load_checkpoint(garbage), DataError);
  std::istringstream truncated(buf.str().substr(0, buf.str().size() / 2));
  EXPECT_THROW(load_checkpoint(truncated), DataError);
}
