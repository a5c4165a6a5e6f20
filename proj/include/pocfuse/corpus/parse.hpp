#pragma once

#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pocfuse/corpus/tokenize.hpp"
#include "pocfuse/corpus/types.hpp"
#include "pocfuse/error.hpp"

namespace pocfuse {

// Record-level validation failure; `field` is a JSON path such as
// "pocs[0].mentions[1].end".
class RecordError : public std::runtime_error {
 public:
  RecordError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const Tokens& sentence_tokens(const FusionInstance& inst, SentenceId s) {
  switch (s) {
    case SentenceId::a: return inst.sentence_a;
    case SentenceId::b: return inst.sentence_b;
    case SentenceId::summary: return inst.summary;
  }
  return inst.sentence_a;
}

// Throws RecordError on the first violated FusionInstance invariant.
inline void validate_instance(const FusionInstance& inst) {
  std::set<int> seen_ids;
  std::vector<std::pair<SentenceId, Span>> claimed;
  for (std::size_t p = 0; p < inst.pocs.size(); ++p) {
    const PoC& poc = inst.pocs[p];
    const std::string at = "pocs[" + std::to_string(p) + "]";
    if (poc.poc_id < 1) throw RecordError(at + ".poc_id", "poc_id must be >= 1");
    if (!seen_ids.insert(poc.poc_id).second)
      throw RecordError(at + ".poc_id", "duplicate poc_id " + std::to_string(poc.poc_id));
    if (poc.mentions.empty()) throw RecordError(at + ".mentions", "PoC has no mentions");
    bool in_a = false, in_b = false;
    for (std::size_t m = 0; m < poc.mentions.size(); ++m) {
      const Mention& mention = poc.mentions[m];
      const std::string mat = at + ".mentions[" + std::to_string(m) + "]";
      const std::size_t len = sentence_tokens(inst, mention.sentence).size();
      if (mention.span.start >= mention.span.end || mention.span.end > len)
        throw RecordError(mat + ".end", "span out of bounds");
      for (const auto& [sent, span] : claimed)
        if (sent == mention.sentence && span.overlaps(mention.span))
          throw RecordError(mat, "overlapping mentions");
      claimed.emplace_back(mention.sentence, mention.span);
      in_a = in_a || mention.sentence == SentenceId::a;
      in_b = in_b || mention.sentence == SentenceId::b;
    }
    if (!in_a || !in_b) throw RecordError(at + ".mentions", "PoC must tie A and B");
  }
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key,
                                   const std::string& path) {
  if (!obj.is_object()) throw RecordError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw RecordError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline std::string string_field(const nlohmann::json& obj, const char* key,
                                const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_string()) throw RecordError(path.empty() ? key : path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline long long int_field(const nlohmann::json& obj, const char* key, const std::string& path) {
  const auto& v = field(obj, key, path);
  if (!v.is_number_integer())
    throw RecordError(path.empty() ? key : path + "." + key, "expected an integer");
  return v.get<long long>();
}

}  // namespace detail

// Parses one JSON record. Throws RecordError.
inline FusionInstance parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw RecordError("record", std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw RecordError("record", "malformed record: expected a JSON object");
  FusionInstance inst;
  inst.id = detail::string_field(j, "id", "");
  inst.sentence_a = tokenize(detail::string_field(j, "sent_a", ""));
  inst.sentence_b = tokenize(detail::string_field(j, "sent_b", ""));
  inst.summary = tokenize(detail::string_field(j, "summary", ""));
  const auto& pocs = detail::field(j, "pocs", "");
  if (!pocs.is_array()) throw RecordError("pocs", "expected an array");
  for (std::size_t p = 0; p < pocs.size(); ++p) {
    const std::string at = "pocs[" + std::to_string(p) + "]";
    PoC poc;
    const long long pid = detail::int_field(pocs[p], "poc_id", at);
    if (pid < 1 || pid > 1'000'000) throw RecordError(at + ".poc_id", "poc_id must be >= 1");
    poc.poc_id = static_cast<int>(pid);
    const auto& mentions = detail::field(pocs[p], "mentions", at);
    if (!mentions.is_array()) throw RecordError(at + ".mentions", "expected an array");
    for (std::size_t m = 0; m < mentions.size(); ++m) {
      const std::string mat = at + ".mentions[" + std::to_string(m) + "]";
      Mention mention;
      const std::string sent = detail::string_field(mentions[m], "sent", mat);
      if (sent == "a") mention.sentence = SentenceId::a;
      else if (sent == "b") mention.sentence = SentenceId::b;
      else if (sent == "summary") mention.sentence = SentenceId::summary;
      else throw RecordError(mat + ".sent", "sent must be \"a\", \"b\" or \"summary\"");
      const long long start = detail::int_field(mentions[m], "start", mat);
      const long long end = detail::int_field(mentions[m], "end", mat);
      if (start < 0) throw RecordError(mat + ".start", "span out of bounds");
      if (end < 0) throw RecordError(mat + ".end", "span out of bounds");
      mention.span = {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
      poc.mentions.push_back(mention);
    }
    inst.pocs.push_back(std::move(poc));
  }
  validate_instance(inst);
  return inst;
}

// Line-delimited corpus; blank lines are skipped. Errors name the 1-based line.
inline std::vector<FusionInstance> parse_corpus(std::istream& in) {
  std::vector<FusionInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const RecordError& e) {
      throw DataError("line " + std::to_string(line_no) + ": field '" + e.field() + "': " + e.what());
    }
  }
  return out;
}

inline std::vector<FusionInstance> parse_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in);
}

inline nlohmann::json instance_to_json(const FusionInstance& inst) {
  nlohmann::json pocs = nlohmann::json::array();
  for (const PoC& poc : inst.pocs) {
    nlohmann::json mentions = nlohmann::json::array();
    for (const Mention& m : poc.mentions)
      mentions.push_back({{"sent", std::string(to_string(m.sentence))},
                          {"start", m.span.start},
                          {"end", m.span.end}});
    pocs.push_back({{"poc_id", poc.poc_id}, {"mentions", std::move(mentions)}});
  }
  return {{"id", inst.id},
          {"sent_a", join_tokens(inst.sentence_a)},
          {"sent_b", join_tokens(inst.sentence_b)},
          {"summary", join_tokens(inst.summary)},
          {"pocs", std::move(pocs)}};
}

inline void write_corpus(std::ostream& out, const std::vector<FusionInstance>& instances) {
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
}

}  // namespace pocfuse
